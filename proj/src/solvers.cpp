#include "pmoe/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>

#include "pmoe/errors.hpp"
#include "pmoe/metrics.hpp"

namespace pmoe {

namespace {

constexpr int kMaxHalvingsUnconstrained = 30;
constexpr int kMaxHalvingsBarrier = 40;
constexpr int kMaxHalvingsProjected = 30;
constexpr int kMaxProjectionRetries = 10;
// Relative slack allowed when checking the loss constraint on logged iterates.
constexpr double kFeasibilityRelTol = 1e-6;

double current_soft_coverage(const MoEModel& m, const Dataset& data) {
  return soft_coverage(m, data);
}

bool in_scope(Guideline g, bool applicable_only) { return !applicable_only || applicable(g); }

double joint_norm(const Vector& a, const Vector& b) {
  return std::sqrt(a.squaredNorm() + b.squaredNorm());
}

StepEvent pick_event(bool clipped, bool projected, int halvings) {
  if (clipped) return StepEvent::kClipped;
  if (projected) return StepEvent::kProjected;
  if (halvings > 0) return StepEvent::kBacktracked;
  return StepEvent::kAccepted;
}

MoEModel fresh_model(const Dataset& data, const SolverConfig& config) {
  MoEModel m = MoEModel::zeros(data.dim());
  m.gamma = config.gamma;
  m.prob_clip_delta = config.prob_clip_delta;
  m.columns = data.columns;
  m.standardization = data.standardization;
  m.base_rate = data.positive_rate();
  return m;
}

void check_inputs(const Dataset& data, const GuidelineVector& guideline,
                  const SolverConfig& config) {
  config.validate();
  data.validate();
  check_guideline_size(data, guideline);
}

void check_warm(const Dataset& data, const MoEModel& warm) {
  warm.validate();
  if (warm.dim() != data.dim()) {
    throw DimensionError(data.dim(), warm.dim());
  }
  if (!warm.reference_loss) {
    throw InvalidArgument("solvers", "warm start has no reference loss; run step 1 first");
  }
}

// Loss of the mixture as a function of the gate, theta fixed: value,
// gradient in w and a positive-semidefinite curvature approximation.
struct GateLossTerms {
  double value = 0.0;
  Vector grad;
  Eigen::MatrixXd hess;
};

GateLossTerms gate_loss_terms(const MoEModel& m, const Dataset& data,
                              const GuidelineVector& guideline) {
  const Evaluation ev = evaluate(m, data.features, guideline);
  const auto d = data.features.cols();
  GateLossTerms out;
  out.grad = Vector::Zero(d + 1);
  out.hess = Eigen::MatrixXd::Zero(d + 1, d + 1);
  Vector coef(ev.mixture.size());
  Vector curv(ev.mixture.size());
  for (Eigen::Index n = 0; n < ev.mixture.size(); ++n) {
    const double y = data.labels[n];
    const double yhat = ev.mixture[n];
    out.value += -(y * std::log(yhat) + (1.0 - y) * std::log(1.0 - yhat));
    const Guideline g = guideline[static_cast<std::size_t>(n)];
    if (!applicable(g)) {
      coef[n] = 0.0;
      curv[n] = 0.0;
      continue;
    }
    const double f = ev.expert[n];
    const double rho = ev.gate[n];
    const double a = (to_int(g) - f) * rho * (1.0 - rho);  // d yhat / d score
    const double d1 = (yhat - y) / (yhat * (1.0 - yhat));
    const double d2 = y / (yhat * yhat) + (1.0 - y) / ((1.0 - yhat) * (1.0 - yhat));
    coef[n] = d1 * a;
    curv[n] = std::max(0.0, d2 * a * a + d1 * a * (1.0 - 2.0 * rho));
  }
  out.grad.head(d) = data.features.transpose() * coef;
  out.grad[d] = coef.sum();
  // Augmented Gram matrix weighted by the per-row curvature.
  const FeatureMatrix weighted = data.features.array().colwise() * curv.array();
  out.hess.topLeftCorner(d, d) = data.features.transpose() * weighted;
  const Vector cross = weighted.colwise().sum().transpose();
  out.hess.block(0, d, d, 1) = cross;
  out.hess.block(d, 0, 1, d) = cross.transpose();
  out.hess(d, d) = curv.sum();
  return out;
}

double l1_excluding_bias(const Vector& w) { return w.head(w.size() - 1).lpNorm<1>(); }

// Minimum-norm subgradient of the proximal objective.
double optimality_measure(const Vector& smooth_grad, const Vector& w, double l1_weight) {
  double sq = 0.0;
  const auto d = w.size() - 1;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    double v = smooth_grad[j];
    if (j < d && l1_weight > 0.0) {
      if (w[j] != 0.0) {
        v += l1_weight * (w[j] > 0.0 ? 1.0 : -1.0);
      } else {
        v = std::max(0.0, std::abs(v) - l1_weight);
      }
    }
    sq += v * v;
  }
  return std::sqrt(sq);
}

// Coordinate descent on g'D + 0.5 D'HD + c ||(w + D)_{0..d-1}||_1.
Vector proximal_newton_direction(const Vector& grad, const Eigen::MatrixXd& hess, const Vector& w,
                                 double l1_weight) {
  const auto p = w.size();
  const auto d = p - 1;
  if (l1_weight == 0.0) {
    return hess.llt().solve(-grad);
  }
  Vector delta = Vector::Zero(p);
  Vector h_delta = Vector::Zero(p);
  for (int sweep = 0; sweep < 500; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double a = hess(j, j);
      const double b = grad[j] + h_delta[j] - a * delta[j];
      double next = 0.0;
      if (j == d) {
        next = -b / a;
      } else {
        const double u = w[j] - b / a;
        const double thr = l1_weight / a;
        const double shrunk = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
        next = shrunk - w[j];
      }
      const double change = next - delta[j];
      if (change != 0.0) {
        h_delta += hess.col(j) * change;
        delta[j] = next;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change <= 1e-15 * (1.0 + delta.lpNorm<Eigen::Infinity>())) break;
  }
  return delta;
}

struct BarrierValue {
  double objective = 0.0;
  double loss = 0.0;
  double slack = 0.0;
};

BarrierValue barrier_value(const MoEModel& m, const Dataset& data,
                           const GuidelineVector& guideline, double bound,
                           const SolverConfig& config) {
  BarrierValue v;
  v.loss = loss(m, data, guideline);
  v.slack = bound - v.loss;
  if (!(v.slack > 0.0)) {
    v.objective = std::numeric_limits<double>::infinity();
    return v;
  }
  v.objective = config.t * coverage_objective(m, data, guideline, config.coverage_applicable_only) -
                std::log(v.slack);
  return v;
}

}  // namespace

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kUnconstrained: return "unconstrained";
    case SolverKind::kLogBarrier: return "log_barrier";
    case SolverKind::kProjectedGradient: return "projected_gradient";
  }
  return "unknown";
}

SolverKind parse_solver_kind(const std::string& text) {
  if (text == "unconstrained") return SolverKind::kUnconstrained;
  if (text == "log-barrier" || text == "log_barrier") return SolverKind::kLogBarrier;
  if (text == "projected-gradient" || text == "projected_gradient") {
    return SolverKind::kProjectedGradient;
  }
  throw InvalidArgument("solvers", "unknown solver '" + text + "'");
}

std::string to_string(StepEvent event) {
  switch (event) {
    case StepEvent::kAccepted: return "accepted";
    case StepEvent::kBacktracked: return "backtracked";
    case StepEvent::kProjected: return "projected";
    case StepEvent::kClipped: return "clipped";
  }
  return "unknown";
}

std::string to_string(TrainStatus status) {
  switch (status) {
    case TrainStatus::kConverged: return "converged";
    case TrainStatus::kConvergedAtBoundary: return "converged_at_boundary";
    case TrainStatus::kMaxIters: return "max_iters";
    case TrainStatus::kInfeasibleInit: return "infeasible_init";
    case TrainStatus::kProjectionFailed: return "projection_failed";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("solvers", std::string(name) + " must be positive");
    }
  };
  positive(learning_rate, "learning_rate");
  positive(grad_tol, "grad_tol");
  positive(t, "t");
  positive(lambda_cap, "lambda_cap");
  positive(bisect_tol, "bisect_tol");
  positive(inner_tol, "inner_tol");
  positive(norm_cap, "norm_cap");
  if (max_iters < 1 || max_inner_iters < 1) {
    throw InvalidArgument("solvers", "iteration limits must be positive");
  }
  if (!(epsilon >= 0.0) || !(gamma >= 0.0)) {
    throw InvalidArgument("solvers", "epsilon and gamma must be nonnegative");
  }
  if (!(prob_clip_delta > 0.0 && prob_clip_delta < 0.5)) {
    throw InvalidArgument("solvers", "prob_clip_delta must lie in (0, 0.5)");
  }
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "iter,loss,slack,soft_coverage,step,event\n";
  char buf[256];
  for (const auto& r : records) {
    char slack[40] = "";
    if (r.slack) std::snprintf(slack, sizeof(slack), "%.17g", *r.slack);
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%.17g,%.17g,%s\n", r.iter, r.loss, slack,
                  r.soft_coverage, r.step, to_string(r.event).c_str());
    out << buf;
  }
  out << "# status," << to_string(status) << '\n';
}

std::string TrainReport::to_csv() const {
  std::ostringstream s;
  write_csv(s);
  return s.str();
}

double coverage_objective(const MoEModel& model, const Dataset& data,
                          const GuidelineVector& guideline, bool applicable_only) {
  const Evaluation ev = evaluate(model, data.features, guideline);
  double total = 0.0;
  for (Eigen::Index n = 0; n < ev.gate.size(); ++n) {
    if (in_scope(guideline[static_cast<std::size_t>(n)], applicable_only)) {
      total -= std::log(ev.gate[n]);
    }
  }
  return total;
}

Vector coverage_gradient(const MoEModel& model, const Dataset& data,
                         const GuidelineVector& guideline, bool applicable_only) {
  const Evaluation ev = evaluate(model, data.features, guideline);
  const auto d = data.features.cols();
  Vector coef(ev.gate.size());
  for (Eigen::Index n = 0; n < ev.gate.size(); ++n) {
    coef[n] = in_scope(guideline[static_cast<std::size_t>(n)], applicable_only)
                  ? -(1.0 - ev.gate[n])
                  : 0.0;
  }
  Vector grad(d + 1);
  grad.head(d) = data.features.transpose() * coef;
  grad[d] = coef.sum();
  return grad;
}

// ---------------------------------------------------------------------------
// Step 1

TrainResult train_unconstrained(const Dataset& data, const GuidelineVector& guideline,
                                const SolverConfig& config) {
  check_inputs(data, guideline, config);
  MoEModel m = fresh_model(data, config);
  m.solver = "unconstrained";
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> init(-0.01, 0.01);
  for (Eigen::Index j = 0; j < m.theta.size(); ++j) m.theta[j] = init(rng);
  for (Eigen::Index j = 0; j < m.w.size(); ++j) m.w[j] = init(rng);

  TrainResult result;
  double current = loss(m, data, guideline);
  if (!std::isfinite(current)) {
    throw SolverError("solvers", "loss is not finite at initialization; check standardization");
  }
  double step_prev = config.learning_rate;
  result.report.status = TrainStatus::kMaxIters;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const Gradients grad = loss_gradients(m, data, guideline);
    if (!grad.theta.allFinite() || !grad.w.allFinite()) {
      throw SolverError("solvers", "non-finite gradient; check standardization");
    }
    if (joint_norm(grad.theta, grad.w) <= config.grad_tol) {
      result.report.status = TrainStatus::kConverged;
      break;
    }
    double step = std::min(config.learning_rate, 2.0 * step_prev);
    int halvings = 0;
    bool accepted = false;
    bool clipped = false;
    MoEModel candidate = m;
    double cand_loss = current;
    while (halvings <= kMaxHalvingsUnconstrained) {
      candidate.theta = m.theta - step * grad.theta;
      candidate.w = m.w - step * grad.w;
      clipped = enforce_norm_cap(candidate.theta, config.norm_cap);
      clipped = enforce_norm_cap(candidate.w, config.norm_cap) || clipped;
      cand_loss = loss(candidate, data, guideline);
      if (std::isnan(cand_loss)) {
        throw SolverError("solvers", "loss became NaN; check standardization");
      }
      if (cand_loss < current) {
        accepted = true;
        break;
      }
      step *= 0.5;
      ++halvings;
    }
    if (!accepted) {
      result.report.status = TrainStatus::kConverged;
      result.report.message = "no descent step after backtracking";
      break;
    }
    m = std::move(candidate);
    current = cand_loss;
    step_prev = step;
    result.report.records.push_back({iter, current, std::nullopt,
                                     current_soft_coverage(m, data), step,
                                     pick_event(clipped, false, halvings)});
  }
  m.reference_loss = loss(m, data, guideline);
  result.model = std::move(m);
  return result;
}

TrainResult train_ml_only(const Dataset& data, const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.gamma = 0.0;
  const GuidelineVector none(data.rows(), Guideline::kNotApplicable);
  TrainResult result = train_unconstrained(data, none, cfg);
  result.model.w.setZero();
  result.model.solver = "ml_only";
  return result;
}

// ---------------------------------------------------------------------------
// Log-barrier

TrainResult train_log_barrier(const Dataset& data, const GuidelineVector& guideline,
                              const MoEModel& warm, const SolverConfig& config) {
  check_inputs(data, guideline, config);
  check_warm(data, warm);
  MoEModel m = warm;
  m.epsilon = config.epsilon;
  m.solver = "log_barrier";
  const double reference = *warm.reference_loss;
  const double bound = (1.0 + config.epsilon) * reference;

  TrainResult result;
  BarrierValue current = barrier_value(m, data, guideline, bound, config);
  if (!(current.slack > 0.0)) {
    result.report.status = TrainStatus::kInfeasibleInit;
    result.report.message = "warm start violates the loss constraint";
    result.model = std::move(m);
    return result;
  }
  double step_prev = config.learning_rate;
  result.report.status = TrainStatus::kMaxIters;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    const Gradients lg = loss_gradients(m, data, guideline);
    const Vector gcov = coverage_gradient(m, data, guideline, config.coverage_applicable_only);
    const Vector g_theta = lg.theta / current.slack;
    const Vector g_w = config.t * gcov + lg.w / current.slack;
    const double gnorm = joint_norm(g_theta, g_w);
    if (gnorm <= config.grad_tol) {
      result.report.status = TrainStatus::kConverged;
      break;
    }
    double step = std::min(config.learning_rate, 2.0 * step_prev);
    int halvings = 0;
    bool accepted = false;
    bool clipped = false;
    MoEModel candidate = m;
    BarrierValue next;
    while (halvings <= kMaxHalvingsBarrier) {
      candidate.theta = m.theta - step * g_theta;
      candidate.w = m.w - step * g_w;
      clipped = enforce_norm_cap(candidate.theta, config.norm_cap);
      clipped = enforce_norm_cap(candidate.w, config.norm_cap) || clipped;
      next = barrier_value(candidate, data, guideline, bound, config);
      // Steps that leave the interior or fail to decrease are rejected.
      if (next.slack > 0.0 && next.objective < current.objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
      ++halvings;
    }
    if (!accepted) {
      result.report.status = TrainStatus::kConvergedAtBoundary;
      result.report.message = "step rejected after maximum halvings";
      break;
    }
    const double moved = step * gnorm;
    m = std::move(candidate);
    current = next;
    step_prev = step;
    result.report.records.push_back({iter, current.loss, current.slack,
                                     current_soft_coverage(m, data), step,
                                     pick_event(clipped, false, halvings)});
    if (moved < config.grad_tol) {
      result.report.status = TrainStatus::kConverged;
      break;
    }
  }
  result.model = std::move(m);
  return result;
}

// ---------------------------------------------------------------------------
// Projection

Vector solve_proximal_subproblem(const MoEModel& model, const Vector& z, double lambda,
                                 const Vector& start, const Dataset& data,
                                 const GuidelineVector& guideline, const SolverConfig& config) {
  MoEModel m = model;
  m.w = start;
  const double l1_weight = lambda * model.gamma;
  auto objective = [&](const MoEModel& mm, double data_value) {
    return 0.5 * (mm.w - z).squaredNorm() + lambda * data_value + l1_weight * l1_excluding_bias(mm.w);
  };
  GateLossTerms terms = gate_loss_terms(m, data, guideline);
  double value = objective(m, terms.value);
  const auto p = z.size();
  for (int iter = 0; iter < config.max_inner_iters; ++iter) {
    const Vector grad = (m.w - z) + lambda * terms.grad;
    if (optimality_measure(grad, m.w, l1_weight) <= config.inner_tol) break;
    const Eigen::MatrixXd hess = Eigen::MatrixXd::Identity(p, p) + lambda * terms.hess;
    const Vector delta = proximal_newton_direction(grad, hess, m.w, l1_weight);
    const double decrease =
        grad.dot(delta) + l1_weight * (l1_excluding_bias(m.w + delta) - l1_excluding_bias(m.w));
    if (!(decrease < 0.0)) break;
    double s = 1.0;
    bool accepted = false;
    MoEModel candidate = m;
    GateLossTerms cand_terms;
    double cand_value = value;
    for (int k = 0; k < 60; ++k) {
      candidate.w = m.w + s * delta;
      cand_terms = gate_loss_terms(candidate, data, guideline);
      cand_value = objective(candidate, cand_terms.value);
      if (cand_value <= value + 1e-4 * s * decrease) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted || cand_value >= value) break;
    m = std::move(candidate);
    terms = std::move(cand_terms);
    value = cand_value;
  }
  return m.w;
}

Vector project_onto_feasible(const MoEModel& model, const Vector& z, const Dataset& data,
                             const GuidelineVector& guideline, double epsilon,
                             double reference_loss, const SolverConfig& config,
                             ProjectionTrace* trace) {
  if (!(reference_loss > 0.0)) {
    throw InvalidArgument("solvers", "reference loss must be positive");
  }
  if (z.size() != model.w.size()) {
    throw DimensionError(model.dim(), static_cast<std::size_t>(z.size()) - 1);
  }
  const double bound = (1.0 + epsilon) * reference_loss;
  MoEModel probe = model;
  auto loss_at = [&](const Vector& w) {
    probe.w = w;
    return loss(probe, data, guideline);
  };
  auto log_step = [&](double lambda, double value) {
    if (trace) trace->steps.push_back({lambda, value, value <= bound});
  };

  if (loss_at(z) <= bound) {
    if (trace) trace->short_circuit = true;
    return z;
  }

  // Grow the upper multiplier until its inner solution is feasible.
  double hi = 1.0;
  double lo = 0.0;
  Vector w_hi = solve_proximal_subproblem(model, z, hi, z, data, guideline, config);
  double l_hi = loss_at(w_hi);
  log_step(hi, l_hi);
  while (l_hi > bound) {
    lo = hi;
    hi *= 2.0;
    if (hi > config.lambda_cap) {
      throw ConstraintUnattainable("constraint unattainable at this theta (multiplier cap " +
                                   std::to_string(config.lambda_cap) + " reached)");
    }
    w_hi = solve_proximal_subproblem(model, z, hi, w_hi, data, guideline, config);
    l_hi = loss_at(w_hi);
    log_step(hi, l_hi);
  }

  Vector w_prev = w_hi;
  while (hi - lo >= config.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Vector w = solve_proximal_subproblem(model, z, mid, w_prev, data, guideline, config);
    const double l = loss_at(w);
    log_step(mid, l);
    w_prev = w;
    if (l > bound) {
      lo = mid;
    } else {
      hi = mid;
      w_hi = w;
    }
  }
  return w_hi;
}

// ---------------------------------------------------------------------------
// Projected gradient

TrainResult train_projected_gradient(const Dataset& data, const GuidelineVector& guideline,
                                     const MoEModel& warm, const SolverConfig& config) {
  check_inputs(data, guideline, config);
  check_warm(data, warm);
  MoEModel m = warm;
  m.epsilon = config.epsilon;
  m.solver = "projected_gradient";
  const double reference = *warm.reference_loss;
  const double bound = (1.0 + config.epsilon) * reference;

  TrainResult result;
  double current_loss = loss(m, data, guideline);
  if (current_loss > bound * (1.0 + kFeasibilityRelTol)) {
    result.report.status = TrainStatus::kInfeasibleInit;
    result.report.message = "warm start violates the loss constraint";
    result.model = std::move(m);
    return result;
  }
  double theta_step_prev = config.learning_rate;
  double w_step_prev = config.learning_rate;
  double current_cov = coverage_objective(m, data, guideline, config.coverage_applicable_only);
  result.report.status = TrainStatus::kMaxIters;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    bool clipped = false;
    bool projected = false;
    int halvings = 0;
    double theta_step = std::min(config.learning_rate, 2.0 * theta_step_prev);
    Vector w_next = m.w;
    MoEModel next = m;
    double next_loss = current_loss;
    bool done = false;

    for (int retry = 0; retry <= kMaxProjectionRetries && !done; ++retry) {
      // Expert step on player 2's objective, backtracking on L.
      const Gradients lg = loss_gradients(m, data, guideline);
      next = m;
      double s = theta_step;
      bool moved_theta = false;
      for (int k = 0; k <= kMaxHalvingsProjected; ++k) {
        next.theta = m.theta - s * lg.theta;
        clipped = enforce_norm_cap(next.theta, config.norm_cap);
        const double l = loss(next, data, guideline);
        if (l < current_loss) {
          moved_theta = true;
          next_loss = l;
          break;
        }
        s *= 0.5;
        ++halvings;
      }
      if (!moved_theta) {
        next.theta = m.theta;
        next_loss = current_loss;
        clipped = false;
      }
      theta_step = s;

      // Gate step on player 1's objective, then projection onto K_eps(theta).
      const Vector gcov = coverage_gradient(next, data, guideline, config.coverage_applicable_only);
      double sw = std::min(config.learning_rate, 2.0 * w_step_prev);
      try {
        bool moved_w = false;
        for (int k = 0; k <= kMaxHalvingsProjected; ++k) {
          Vector z = m.w - sw * gcov;
          const bool z_clipped = enforce_norm_cap(z, config.norm_cap);
          ProjectionTrace trace;
          Vector p = project_onto_feasible(next, z, data, guideline, config.epsilon, reference,
                                           config, &trace);
          MoEModel trial = next;
          trial.w = p;
          const double cov = coverage_objective(trial, data, guideline,
                                                config.coverage_applicable_only);
          if (cov < current_cov) {
            w_next = std::move(p);
            projected = !trace.short_circuit;
            clipped = clipped || z_clipped;
            current_cov = cov;
            moved_w = true;
            break;
          }
          sw *= 0.5;
          ++halvings;
        }
        if (!moved_w) w_next = m.w;
        w_step_prev = sw;
        done = true;
      } catch (const ConstraintUnattainable&) {
        theta_step *= 0.5;
      }
    }
    if (!done) {
      result.report.status = TrainStatus::kProjectionFailed;
      result.report.message = "projection failed after shrinking the expert step";
      break;
    }
    theta_step_prev = theta_step;

    const double displacement = (next.theta - m.theta).norm() + (w_next - m.w).norm();
    next.w = w_next;
    next_loss = loss(next, data, guideline);
    m = std::move(next);
    current_loss = next_loss;
    current_cov = coverage_objective(m, data, guideline, config.coverage_applicable_only);
    result.report.records.push_back({iter, current_loss, bound - current_loss,
                                     current_soft_coverage(m, data), w_step_prev,
                                     pick_event(clipped, projected, halvings)});
    if (displacement < config.grad_tol) {
      result.report.status = TrainStatus::kConverged;
      break;
    }
  }
  result.model = std::move(m);
  return result;
}

PipelineResult train_pipeline(const Dataset& data, const GuidelineVector& guideline,
                              const SolverConfig& config, const std::optional<MoEModel>& warm) {
  PipelineResult out;
  if (warm) {
    out.warm.model = *warm;
  } else {
    SolverConfig step1 = config;
    step1.kind = SolverKind::kUnconstrained;
    out.warm = train_unconstrained(data, guideline, step1);
  }
  switch (config.kind) {
    case SolverKind::kUnconstrained:
      out.final = out.warm;
      break;
    case SolverKind::kLogBarrier:
      out.final = train_log_barrier(data, guideline, out.warm.model, config);
      break;
    case SolverKind::kProjectedGradient:
      out.final = train_projected_gradient(data, guideline, out.warm.model, config);
      break;
  }
  return out;
}

}  // namespace pmoe
