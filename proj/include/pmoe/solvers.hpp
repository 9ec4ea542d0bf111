#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pmoe/model.hpp"

namespace pmoe {

enum class SolverKind { kUnconstrained, kLogBarrier, kProjectedGradient };

std::string to_string(SolverKind kind);
SolverKind parse_solver_kind(const std::string& text);

struct SolverConfig {
  SolverKind kind = SolverKind::kUnconstrained;
  double learning_rate = 0.1;
  int max_iters = 1000;
  double grad_tol = 1e-6;
  // Weight on the coverage term of the log-barrier objective.
  double t = 5.0;
  double epsilon = 0.1;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  double lambda_cap = 1e6;
  double bisect_tol = 1e-6;
  double inner_tol = 1e-8;
  int max_inner_iters = 100;
  double norm_cap = kDefaultNormCap;
  double prob_clip_delta = kDefaultClipDelta;
  // Restrict the coverage objective to rows where some rule applies.
  bool coverage_applicable_only = false;

  void validate() const;
};

enum class StepEvent { kAccepted, kBacktracked, kProjected, kClipped };
std::string to_string(StepEvent event);

struct IterationRecord {
  int iter = 0;
  double loss = 0.0;
  std::optional<double> slack;  // (1+eps) L* - L, when L* is known
  double soft_coverage = 0.0;
  double step = 0.0;
  StepEvent event = StepEvent::kAccepted;
};

enum class TrainStatus {
  kConverged,
  kConvergedAtBoundary,
  kMaxIters,
  kInfeasibleInit,
  kProjectionFailed,
};
std::string to_string(TrainStatus status);

struct TrainReport {
  std::vector<IterationRecord> records;
  TrainStatus status = TrainStatus::kMaxIters;
  std::string message;

  // CSV: iter,loss,slack,soft_coverage,step,event then a "# status" line.
  void write_csv(std::ostream& out) const;
  std::string to_csv() const;
};

struct TrainResult {
  MoEModel model;
  TrainReport report;
};

// Step 1: standard MoE by full-batch gradient descent with backtracking.
// The returned model's reference_loss is its final training loss.
TrainResult train_unconstrained(const Dataset& data, const GuidelineVector& guideline,
                                const SolverConfig& config);

// Logistic regression on the expert alone (gate unused); ML-only baseline.
TrainResult train_ml_only(const Dataset& data, const SolverConfig& config);

// Joint descent on -t sum ln rho - ln((1+eps) L* - L) from a warm start.
TrainResult train_log_barrier(const Dataset& data, const GuidelineVector& guideline,
                              const MoEModel& warm, const SolverConfig& config);

// Alternating expert step on L and projected gate step on -sum ln rho.
TrainResult train_projected_gradient(const Dataset& data, const GuidelineVector& guideline,
                                     const MoEModel& warm, const SolverConfig& config);

// Runs step 1 if needed, then the configured solver.
struct PipelineResult {
  TrainResult warm;
  TrainResult final;
};
PipelineResult train_pipeline(const Dataset& data, const GuidelineVector& guideline,
                              const SolverConfig& config,
                              const std::optional<MoEModel>& warm = std::nullopt);

struct ProjectionStep {
  double lambda = 0.0;
  double loss = 0.0;
  bool feasible = false;
};

struct ProjectionTrace {
  std::vector<ProjectionStep> steps;
  bool short_circuit = false;
};

// Euclidean projection of the gate vector z onto
// {w : L(theta, w) <= (1+eps) L*} by bisection on the Lagrange multiplier.
// `model` supplies theta, gamma and the clip delta. Throws
// ConstraintUnattainable when the multiplier cap is reached while infeasible.
Vector project_onto_feasible(const MoEModel& model, const Vector& z, const Dataset& data,
                             const GuidelineVector& guideline, double epsilon,
                             double reference_loss, const SolverConfig& config,
                             ProjectionTrace* trace = nullptr);

// argmin_w 0.5 ||w - z||^2 + lambda L(theta, w), from `start`.
Vector solve_proximal_subproblem(const MoEModel& model, const Vector& z, double lambda,
                                 const Vector& start, const Dataset& data,
                                 const GuidelineVector& guideline, const SolverConfig& config);

// Player 1's objective -sum ln rho_w(x_n) and its gradient in w.
double coverage_objective(const MoEModel& model, const Dataset& data,
                          const GuidelineVector& guideline, bool applicable_only);
Vector coverage_gradient(const MoEModel& model, const Dataset& data,
                         const GuidelineVector& guideline, bool applicable_only);

}  // namespace pmoe
