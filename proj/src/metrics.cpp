#include "pmoe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

std::vector<double> gates_in_scope(const Evaluation& ev, const GuidelineVector& guideline,
                                   CoverageScope scope) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(ev.gate.size()));
  for (Eigen::Index n = 0; n < ev.gate.size(); ++n) {
    if (scope == CoverageScope::kApplicableRows &&
        !applicable(guideline[static_cast<std::size_t>(n)])) {
      continue;
    }
    out.push_back(ev.gate[n]);
  }
  return out;
}

Evaluation evaluate_for_coverage(const MoEModel& model, const Dataset& data,
                                 const GuidelineVector& guideline, CoverageScope scope) {
  if (scope == CoverageScope::kApplicableRows) {
    check_guideline_size(data, guideline);
    return evaluate(model, data.features, guideline);
  }
  // Gate values do not depend on g.
  return evaluate(model, data.features,
                  GuidelineVector(data.rows(), Guideline::kNotApplicable));
}

void check_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) {
    throw InvalidArgument("metrics", std::string(name) + " grid is empty");
  }
  for (double v : grid) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("metrics", std::string(name) + " grid values must lie in [0, 1]");
    }
  }
}

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

}  // namespace

double soft_coverage(std::span<const double> gate_values) {
  if (gate_values.empty()) {
    throw InvalidArgument("metrics", "soft coverage of an empty set");
  }
  double sum = 0.0;
  for (double r : gate_values) sum += r;
  return 100.0 * sum / static_cast<double>(gate_values.size());
}

double soft_coverage(const MoEModel& model, const Dataset& data, const GuidelineVector& guideline,
                     CoverageScope scope) {
  const Evaluation ev = evaluate_for_coverage(model, data, guideline, scope);
  return soft_coverage(gates_in_scope(ev, guideline, scope));
}

double hard_coverage(std::span<const double> gate_values, double threshold) {
  if (gate_values.empty()) {
    throw InvalidArgument("metrics", "hard coverage of an empty set");
  }
  std::size_t count = 0;
  for (double r : gate_values) count += r >= threshold ? 1 : 0;
  return 100.0 * static_cast<double>(count) / static_cast<double>(gate_values.size());
}

double hard_coverage(const MoEModel& model, const Dataset& data, double threshold,
                     const GuidelineVector& guideline, CoverageScope scope) {
  const Evaluation ev = evaluate_for_coverage(model, data, guideline, scope);
  return hard_coverage(gates_in_scope(ev, guideline, scope), threshold);
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("metrics", "AUC scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Average 1-based rank over each tie group.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = avg;
    i = j;
  }
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (labels[k] == 1.0) {
      rank_sum += rank[k];
      ++positives;
    } else if (labels[k] != 0.0) {
      throw InvalidArgument("metrics", "AUC labels must be 0 or 1");
    }
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw InvalidArgument("metrics", "AUC is undefined when only one class is present");
  }
  const double np = static_cast<double>(positives);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(negatives));
}

double accuracy(std::span<const double> scores, std::span<const double> labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw InvalidArgument("metrics", "accuracy needs equal, nonempty inputs");
  }
  std::size_t correct = 0;
  for (std::size_t n = 0; n < scores.size(); ++n) {
    const double predicted = scores[n] >= threshold ? 1.0 : 0.0;
    correct += predicted == labels[n] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<double> default_grid() {
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[static_cast<std::size_t>(i)] = i / 100.0;
  return grid;
}

int hard_gated_label(double f, double rho, Guideline g, double gate_threshold,
                     double pred_threshold) {
  if (applicable(g) && rho >= gate_threshold) {
    return to_int(g);
  }
  return f >= pred_threshold ? 1 : 0;
}

Curve accuracy_coverage_curve(const Evaluation& ev, const Vector& labels,
                              const GuidelineVector& guideline,
                              const std::vector<double>& gate_grid,
                              const std::vector<double>& pred_grid) {
  check_grid(gate_grid, "gate");
  check_grid(pred_grid, "prediction");
  const auto n_rows = static_cast<std::size_t>(labels.size());
  if (n_rows == 0 || guideline.size() != n_rows ||
      static_cast<std::size_t>(ev.gate.size()) != n_rows) {
    throw InvalidArgument("metrics", "curve inputs must be nonempty and aligned");
  }
  std::vector<double> gates(gate_grid);
  std::vector<double> preds(pred_grid);
  std::sort(gates.begin(), gates.end());
  std::sort(preds.begin(), preds.end());
  const std::span<const double> rho(ev.gate.data(), n_rows);

  Curve curve;
  curve.points.reserve(gates.size() * preds.size());
  for (double t : gates) {
    const double coverage = hard_coverage(rho, t);
    CurvePoint best;
    bool have_best = false;
    for (double tau : preds) {
      std::size_t correct = 0;
      for (std::size_t n = 0; n < n_rows; ++n) {
        const auto idx = static_cast<Eigen::Index>(n);
        const int predicted = hard_gated_label(ev.expert[idx], ev.gate[idx], guideline[n], t, tau);
        correct += predicted == static_cast<int>(labels[idx]) ? 1 : 0;
      }
      const CurvePoint p{t, tau, 100.0 * static_cast<double>(correct) / static_cast<double>(n_rows),
                         coverage};
      curve.points.push_back(p);
      if (!have_best || p.accuracy > best.accuracy) {
        best = p;
        have_best = true;
      }
    }
    curve.frontier.push_back(best);
  }
  return curve;
}

Curve accuracy_coverage_curve(const MoEModel& model, const Dataset& data,
                              const GuidelineVector& guideline,
                              const std::vector<double>& gate_grid,
                              const std::vector<double>& pred_grid) {
  check_guideline_size(data, guideline);
  return accuracy_coverage_curve(evaluate(model, data.features, guideline), data.labels, guideline,
                                 gate_grid, pred_grid);
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
  out << "gate_threshold,pred_threshold,accuracy,hard_coverage\n";
  char line[160];
  for (const auto& p : points) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f,%.6f\n", p.gate_threshold, p.pred_threshold,
                  p.accuracy, p.hard_coverage);
    out << line;
  }
}

Thresholds calibrate_thresholds(const MoEModel& model, const Dataset& validation,
                                const GuidelineVector& guideline, CalibrationObjective objective,
                                const std::vector<double>& gate_grid,
                                const std::vector<double>& pred_grid) {
  check_grid(gate_grid, "gate");
  check_grid(pred_grid, "prediction");
  check_guideline_size(validation, guideline);
  const Evaluation ev = evaluate(model, validation.features, guideline);
  const auto n_rows = validation.rows();

  Thresholds best;
  bool have_best = false;
  for (double t : gate_grid) {
    for (double tau : pred_grid) {
      Confusion c;
      for (std::size_t n = 0; n < n_rows; ++n) {
        const auto idx = static_cast<Eigen::Index>(n);
        const int predicted = hard_gated_label(ev.expert[idx], ev.gate[idx], guideline[n], t, tau);
        const bool positive = validation.labels[idx] == 1.0;
        if (predicted == 1) {
          positive ? ++c.tp : ++c.fp;
        } else {
          positive ? ++c.fn : ++c.tn;
        }
      }
      double value = 0.0;
      if (objective == CalibrationObjective::kAccuracy) {
        value = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(n_rows);
      } else {
        const double tpr = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn)
                                       : 0.0;
        const double tnr = c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp)
                                       : 0.0;
        value = tpr + tnr - 1.0;
      }
      bool better = !have_best || value > best.objective;
      if (have_best && value == best.objective) {
        if (t != best.gate) {
          better = t > best.gate;
        } else {
          const double da = std::abs(tau - 0.5);
          const double db = std::abs(best.pred - 0.5);
          better = da < db || (da == db && tau > best.pred);
        }
      }
      if (better) {
        best = {t, tau, value};
        have_best = true;
      }
    }
  }
  return best;
}

}  // namespace pmoe
