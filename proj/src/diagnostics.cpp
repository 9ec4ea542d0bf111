#include "pmoe/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

constexpr double kKinkMargin = 1e-3;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

std::optional<double> min_eigenvalue(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) return std::nullopt;
  return solver.eigenvalues().minCoeff();
}

// Central-difference Jacobian of `grad` at x, columns indexed by x.
Eigen::MatrixXd fd_jacobian(const std::function<Vector(const Vector&)>& grad, const Vector& x,
                            double h) {
  const Vector g0 = grad(x);
  Eigen::MatrixXd jac(g0.size(), x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + h;
    const Vector up = grad(probe);
    probe[j] = x[j] - h;
    const Vector down = grad(probe);
    probe[j] = x[j];
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kPreconditionViolated: return "precondition_violated";
  }
  return "unknown";
}

std::string GradientCheckReport::to_text() const {
  std::ostringstream out;
  out << "status: " << to_string(status) << '\n';
  out << "max_relative_error: " << fmt(max_rel_error) << '\n';
  out << "failing_coordinate: ";
  if (failing_coordinate) {
    out << (failing_name.empty() ? std::to_string(*failing_coordinate) : failing_name);
  } else {
    out << "none";
  }
  out << '\n';
  if (!message.empty()) out << "message: " << message << '\n';
  return out.str();
}

GradientCheckReport check_gradients(const std::function<double(const Vector&)>& f,
                                    const std::function<Vector(const Vector&)>& grad,
                                    const Vector& x, double fd_step, double tol) {
  if (!(fd_step > 0.0) || !(tol > 0.0)) {
    throw InvalidArgument("diagnostics", "fd_step and tol must be positive");
  }
  GradientCheckReport report;
  const Vector analytic = grad(x);
  if (analytic.size() != x.size()) {
    throw InvalidArgument("diagnostics", "gradient length does not match the point");
  }
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + fd_step;
    const double up = f(probe);
    probe[j] = x[j] - fd_step;
    const double down = f(probe);
    probe[j] = x[j];
    const double numeric = (up - down) / (2.0 * fd_step);
    const double err = std::abs(analytic[j] - numeric) /
                       std::max({1.0, std::abs(analytic[j]), std::abs(numeric)});
    if (!(err <= report.max_rel_error)) {
      report.max_rel_error = err;
      if (!(err < tol)) report.failing_coordinate = static_cast<std::size_t>(j);
    }
  }
  report.status = report.max_rel_error < tol ? CheckStatus::kPass : CheckStatus::kFail;
  if (report.status == CheckStatus::kPass) report.failing_coordinate.reset();
  return report;
}

GradientCheckReport check_gradients(const MoEModel& model, const Dataset& data,
                                    const GuidelineVector& guideline, double fd_step, double tol) {
  model.validate();
  check_guideline_size(data, guideline);
  const auto p = model.theta.size();
  if (model.gamma > 0.0) {
    for (Eigen::Index j = 0; j + 1 < model.w.size(); ++j) {
      if (std::abs(model.w[j]) <= kKinkMargin) {
        GradientCheckReport report;
        report.status = CheckStatus::kPreconditionViolated;
        report.message = "w[" + std::to_string(j) + "] is within 1e-3 of the L1 kink";
        return report;
      }
    }
  }
  MoEModel probe = model;
  auto unpack = [&](const Vector& x) {
    probe.theta = x.head(p);
    probe.w = x.tail(p);
  };
  auto f = [&](const Vector& x) {
    unpack(x);
    return loss(probe, data, guideline);
  };
  auto grad = [&](const Vector& x) {
    unpack(x);
    const Gradients g = loss_gradients(probe, data, guideline);
    Vector out(2 * p);
    out << g.theta, g.w;
    return out;
  };
  Vector x(2 * p);
  x << model.theta, model.w;
  GradientCheckReport report = check_gradients(f, grad, x, fd_step, tol);
  if (report.failing_coordinate) {
    const auto j = static_cast<Eigen::Index>(*report.failing_coordinate);
    report.failing_name =
        j < p ? "theta[" + std::to_string(j) + "]" : "w[" + std::to_string(j - p) + "]";
  }
  return report;
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int k = -2; k <= 4; ++k) grid.push_back(std::pow(10.0, k));
  return grid;
}

std::string MonotonicityReport::to_text() const {
  std::ostringstream out;
  out << "lambda: " << fmt(lambda) << '\n';
  out << "mu: " << fmt(mu) << '\n';
  out << "r_ww_min_eigenvalue: " << fmt(r_ww_min_eigenvalue) << '\n';
  out << "r_tt_min_eigenvalue: " << fmt(r_tt_min_eigenvalue) << '\n';
  out << "blocks_positive_definite: " << (blocks_positive_definite ? "true" : "false") << '\n';
  for (const auto& e : entries) {
    out << "c=" << fmt(e.c) << ": min_eigenvalue "
        << (e.min_eigenvalue ? fmt(*e.min_eigenvalue) : std::string("failed"))
        << (e.certified ? " certified" : "") << '\n';
  }
  out << "certifying_c: " << (certifying_c ? fmt(*certifying_c) : std::string("none")) << '\n';
  if (schur) {
    out << "schur_min_eigenvalue: " << fmt(schur->min_eigenvalue) << '\n';
    out << "schur_psd: " << (schur->psd ? "true" : "false") << '\n';
    out << "schur_printed_form_min_eigenvalue: " << fmt(schur->printed_form_min_eigenvalue)
        << '\n';
    out << "schur_agrees: " << (schur->agrees_with_eigen_check ? "true" : "false") << '\n';
  }
  if (!message.empty()) out << "message: " << message << '\n';
  return out.str();
}

MonotonicityReport monotonicity_diagnostic(const MoEModel& model, const Dataset& data,
                                           const GuidelineVector& guideline, double lambda,
                                           const std::vector<double>& c_grid,
                                           const MonotonicityOptions& options) {
  model.validate();
  check_guideline_size(data, guideline);
  if (!(lambda >= 0.0)) throw InvalidArgument("diagnostics", "lambda must be nonnegative");
  for (double c : c_grid) {
    if (!(c > 0.0)) throw InvalidArgument("diagnostics", "c grid entries must be positive");
  }

  MonotonicityReport report;
  report.lambda = lambda;
  report.mu = options.mu;
  const auto p = model.theta.size();
  const double h = options.fd_step;
  MoEModel probe = model;

  auto coverage_grad_w = [&](const Vector& w) {
    probe = model;
    probe.w = w;
    return coverage_gradient(probe, data, guideline, false);
  };
  auto loss_grad_theta = [&](const Vector& theta) {
    probe = model;
    probe.theta = theta;
    return data_loss_gradients(probe, data, guideline).theta;
  };
  auto loss_grad_w_of_theta = [&](const Vector& theta) {
    probe = model;
    probe.theta = theta;
    return data_loss_gradients(probe, data, guideline).w;
  };

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd r_ww = symmetrized(fd_jacobian(coverage_grad_w, model.w, h)) + options.mu * eye;
  const Eigen::MatrixXd r_tt =
      symmetrized(fd_jacobian(loss_grad_theta, model.theta, h)) + options.mu * eye;
  // Rows index w, columns index theta.
  const Eigen::MatrixXd cross = fd_jacobian(loss_grad_w_of_theta, model.theta, h);

  const auto ww_min = min_eigenvalue(r_ww);
  const auto tt_min = min_eigenvalue(r_tt);
  if (!ww_min || !tt_min) {
    report.message = "eigen-solve failed on the Hessian blocks";
    return report;
  }
  report.r_ww_min_eigenvalue = *ww_min;
  report.r_tt_min_eigenvalue = *tt_min;
  report.blocks_positive_definite = *ww_min > options.pd_floor && *tt_min > options.pd_floor;
  if (!report.blocks_positive_definite) {
    report.message = "Hessian blocks are not positive definite; no certification";
  }

  const double off = 0.5 * (1.0 + 2.0 * lambda);
  for (double c : c_grid) {
    Eigen::MatrixXd sym(2 * p, 2 * p);
    sym.topLeftCorner(p, p) = c * r_ww;
    sym.topRightCorner(p, p) = off * cross;
    sym.bottomLeftCorner(p, p) = off * cross.transpose();
    sym.bottomRightCorner(p, p) = (1.0 + lambda) * r_tt;
    MonotonicityEntry entry;
    entry.c = c;
    entry.min_eigenvalue = min_eigenvalue(sym);
    entry.certified = report.blocks_positive_definite && entry.min_eigenvalue &&
                      *entry.min_eigenvalue >= -options.eigen_tol;
    if (entry.certified && !report.certifying_c) report.certifying_c = c;
    report.entries.push_back(entry);
  }

  if (report.certifying_c && report.blocks_positive_definite) {
    const double c = *report.certifying_c;
    const Eigen::MatrixXd inner = cross.transpose() * r_ww.ldlt().solve(cross);
    const Eigen::MatrixXd exact = symmetrized((1.0 + lambda) * r_tt - (off * off / c) * inner);
    const Eigen::MatrixXd printed = symmetrized(r_tt - ((1.0 + 2.0 * lambda) / (2.0 * c)) * inner);
    const auto exact_min = min_eigenvalue(exact);
    const auto printed_min = min_eigenvalue(printed);
    if (exact_min && printed_min) {
      SchurCheck schur;
      schur.c = c;
      schur.min_eigenvalue = *exact_min;
      schur.psd = *exact_min >= -options.eigen_tol;
      schur.printed_form_min_eigenvalue = *printed_min;
      schur.agrees_with_eigen_check = schur.psd;
      report.schur = schur;
    } else {
      report.message = "eigen-solve failed on the Schur complement";
    }
  }
  return report;
}

std::string AssumptionReport::to_text() const {
  std::ostringstream out;
  out << "norm_caps: " << (norm_caps_hold ? "pass" : "fail") << " (theta " << fmt(theta_norm)
      << ", w " << fmt(w_norm) << ")\n";
  out << "feasible_set_witnessed: " << (feasible_witnessed ? "pass" : "fail");
  if (slack) out << " (slack " << fmt(*slack) << ")";
  out << '\n';
  out << "log_concavity: " << (log_concavity_holds ? "pass" : "fail") << " (worst gap "
      << fmt(worst_concavity_gap) << ")\n";
  if (!message.empty()) out << "message: " << message << '\n';
  return out.str();
}

AssumptionReport check_assumptions(const MoEModel& model, const Dataset& data,
                                   const GuidelineVector& guideline, const SolverConfig& config) {
  model.validate();
  check_guideline_size(data, guideline);
  AssumptionReport report;
  report.theta_norm = model.theta.norm();
  report.w_norm = model.w.norm();
  const double cap = config.norm_cap * (1.0 + 1e-12);
  report.norm_caps_hold = report.theta_norm <= cap && report.w_norm <= cap;

  if (model.reference_loss) {
    const double bound = (1.0 + config.epsilon) * *model.reference_loss;
    report.slack = bound - loss(model, data, guideline);
    report.feasible_witnessed = *report.slack >= -1e-6 * bound;
  } else {
    report.message = "no reference loss; feasibility cannot be witnessed";
  }

  // Scores are affine in the parameters, so concavity along a parameter
  // segment reduces to concavity of ln sigma along the score segment.
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto p = model.theta.size();
  const auto d = data.features.cols();
  double worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    for (const Vector* base : {&model.theta, &model.w}) {
      Vector other(p);
      for (Eigen::Index j = 0; j < p; ++j) other[j] = (*base)[j] + unit(rng);
      const Vector sa = data.features * base->head(d) + Vector::Constant(data.features.rows(), (*base)[d]);
      const Vector sb = data.features * other.head(d) + Vector::Constant(data.features.rows(), other[d]);
      for (Eigen::Index n = 0; n < sa.size(); ++n) {
        for (double s : {0.25, 0.5, 0.75}) {
          const double chord = s * log_sigmoid(sa[n]) + (1.0 - s) * log_sigmoid(sb[n]);
          const double mid = log_sigmoid(s * sa[n] + (1.0 - s) * sb[n]);
          worst = std::max(worst, (chord - mid) / (1.0 + std::abs(mid)));
        }
      }
    }
  }
  report.worst_concavity_gap = worst;
  report.log_concavity_holds = worst <= 1e-12;
  return report;
}

}  // namespace pmoe
