#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pmoe/model.hpp"

namespace pmoe {

enum class CoverageScope { kAllRows, kApplicableRows };

// 100 * mean gate value.
double soft_coverage(const MoEModel& model, const Dataset& data,
                     const GuidelineVector& guideline = {},
                     CoverageScope scope = CoverageScope::kAllRows);
double soft_coverage(std::span<const double> gate_values);

// 100 * fraction of rows with gate value >= threshold.
double hard_coverage(const MoEModel& model, const Dataset& data, double threshold,
                     const GuidelineVector& guideline = {},
                     CoverageScope scope = CoverageScope::kAllRows);
double hard_coverage(std::span<const double> gate_values, double threshold);

// Rank-based (Mann-Whitney) AUC with average ranks for ties. Throws
// InvalidArgument when only one class is present.
double auc(std::span<const double> scores, std::span<const double> labels);

// Percent of rows where 1[score >= threshold] equals the label.
double accuracy(std::span<const double> scores, std::span<const double> labels, double threshold);

struct CurvePoint {
  double gate_threshold = 0.0;
  double pred_threshold = 0.0;
  double accuracy = 0.0;       // percent
  double hard_coverage = 0.0;  // percent
};

struct Curve {
  std::vector<CurvePoint> points;    // sorted by gate threshold, then prediction threshold
  std::vector<CurvePoint> frontier;  // best prediction threshold for each gate threshold
};

// {0, 0.01, ..., 1}.
std::vector<double> default_grid();

// Hard gating: a row follows g when g applies and rho >= t, otherwise the
// expert thresholded at tau.
Curve accuracy_coverage_curve(const MoEModel& model, const Dataset& data,
                              const GuidelineVector& guideline,
                              const std::vector<double>& gate_grid,
                              const std::vector<double>& pred_grid);
Curve accuracy_coverage_curve(const Evaluation& ev, const Vector& labels,
                              const GuidelineVector& guideline,
                              const std::vector<double>& gate_grid,
                              const std::vector<double>& pred_grid);

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points);

enum class CalibrationObjective { kAccuracy, kYouden };

struct Thresholds {
  double gate = 1.0;
  double pred = 0.5;
  double objective = 0.0;
};

// Exhaustive grid search. Ties go to the larger gate threshold, then the
// prediction threshold closest to 0.5, then the larger prediction threshold.
Thresholds calibrate_thresholds(const MoEModel& model, const Dataset& validation,
                                const GuidelineVector& guideline, CalibrationObjective objective,
                                const std::vector<double>& gate_grid = default_grid(),
                                const std::vector<double>& pred_grid = default_grid());

// Hard-gated label for one row.
int hard_gated_label(double f, double rho, Guideline g, double gate_threshold,
                     double pred_threshold);

}  // namespace pmoe
