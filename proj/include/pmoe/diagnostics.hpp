#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmoe/model.hpp"
#include "pmoe/solvers.hpp"

namespace pmoe {

enum class CheckStatus { kPass, kFail, kPreconditionViolated };
std::string to_string(CheckStatus status);

struct GradientCheckReport {
  CheckStatus status = CheckStatus::kPass;
  // |analytic - numeric| / max(1, |analytic|, |numeric|), maximized over coordinates.
  double max_rel_error = 0.0;
  std::optional<std::size_t> failing_coordinate;
  std::string failing_name;
  std::string message;

  bool passed() const { return status == CheckStatus::kPass; }
  std::string to_text() const;
};

// Central differences of `loss` against `loss_gradients`, over the packed
// vector (theta, w). With gamma > 0 every non-bias |w_j| must exceed 1e-3.
GradientCheckReport check_gradients(const MoEModel& model, const Dataset& data,
                                    const GuidelineVector& guideline, double fd_step = 1e-6,
                                    double tol = 1e-5);

// Same check for an arbitrary scalar function.
GradientCheckReport check_gradients(const std::function<double(const Vector&)>& f,
                                    const std::function<Vector(const Vector&)>& grad,
                                    const Vector& x, double fd_step, double tol);

struct MonotonicityEntry {
  double c = 0.0;
  std::optional<double> min_eigenvalue;  // empty when the eigen-solve failed
  bool certified = false;
};

struct SchurCheck {
  double c = 0.0;
  // (1+lambda) r_tt - ((1+2 lambda)^2 / (4c)) M' r_ww^-1 M, the exact complement
  // of the symmetric part.
  double min_eigenvalue = 0.0;
  bool psd = false;
  // r_tt - ((1+2 lambda) / (2c)) M' r_ww^-1 M, as printed in the derivation.
  double printed_form_min_eigenvalue = 0.0;
  bool agrees_with_eigen_check = false;
};

struct MonotonicityReport {
  double lambda = 0.0;
  double mu = 0.0;
  double r_ww_min_eigenvalue = 0.0;
  double r_tt_min_eigenvalue = 0.0;
  bool blocks_positive_definite = false;
  std::vector<MonotonicityEntry> entries;
  std::optional<double> certifying_c;
  std::optional<SchurCheck> schur;
  std::string message;

  std::string to_text() const;
};

struct MonotonicityOptions {
  double mu = 1e-3;
  double fd_step = 1e-4;
  double eigen_tol = 1e-8;
  // Smallest eigenvalue the regularized Hessian blocks must exceed.
  double pd_floor = 1e-6;
};

std::vector<double> default_c_grid();  // {1e-2, ..., 1e4}

// Symmetric part of the (w, theta) block Jacobian of the regularized game at
// the model's parameters, with blocks c r_ww, lambda M, (1+lambda) M',
// (1+lambda) r_tt, where r_ww and r_tt are the Hessians of -sum ln rho and L
// plus mu I, and M = d2L / dw dtheta. Hessians use central differences of the
// analytic gradients.
MonotonicityReport monotonicity_diagnostic(const MoEModel& model, const Dataset& data,
                                           const GuidelineVector& guideline, double lambda,
                                           const std::vector<double>& c_grid = default_c_grid(),
                                           const MonotonicityOptions& options = {});

struct AssumptionReport {
  bool norm_caps_hold = false;
  double theta_norm = 0.0;
  double w_norm = 0.0;
  bool feasible_witnessed = false;
  std::optional<double> slack;
  bool log_concavity_holds = false;
  double worst_concavity_gap = 0.0;
  std::string message;

  bool all_pass() const { return norm_caps_hold && feasible_witnessed && log_concavity_holds; }
  std::string to_text() const;
};

// Norm caps, feasibility of the current iterate, and a numeric segment check
// of concavity of ln f and ln rho in the parameters.
AssumptionReport check_assumptions(const MoEModel& model, const Dataset& data,
                                   const GuidelineVector& guideline, const SolverConfig& config);

}  // namespace pmoe
