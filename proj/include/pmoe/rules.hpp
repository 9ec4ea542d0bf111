#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmoe/model.hpp"

namespace pmoe {

enum class Comparison { kLess, kLessEqual, kGreater, kGreaterEqual, kEqual };

std::string_view to_string(Comparison op);

// feature <op> value. `column` is filled in by RuleSet::bind.
struct Clause {
  static constexpr std::size_t kUnbound = std::numeric_limits<std::size_t>::max();

  std::string feature;
  Comparison op = Comparison::kEqual;
  double value = 0.0;
  std::size_t column = kUnbound;

  bool holds(double x) const;
};

// Disjunction of conjunctions: `and` binds tighter than `or`.
struct Antecedent {
  std::vector<std::vector<Clause>> any_of;

  bool holds(FeatureRef raw) const;
};

enum class RuleKind { kPromote, kAvoid };

struct Rule {
  std::string name;
  Antecedent antecedent;
  // Label the rule predicts when its antecedent holds. An avoid rule on label
  // L is stored with consequent 1 - L.
  int consequent = 1;
  RuleKind kind = RuleKind::kPromote;
};

// Ordered rules with first-match aggregation into the guideline function g.
// Antecedents are evaluated on raw (unstandardized) feature values.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<Rule> rules);

  static RuleSet parse(std::string_view text);
  static RuleSet load(const std::filesystem::path& path);

  // Resolves feature names against `schema`; throws SchemaError for unknown
  // names. The returned set is immutable in use.
  RuleSet bind(const std::vector<std::string>& schema) const;
  bool bound() const { return bound_; }

  const std::vector<Rule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  Guideline evaluate(FeatureRef raw) const;
  Guideline evaluate(const Vector& raw) const { return evaluate(FeatureRef(raw)); }
  GuidelineVector evaluate(const FeatureMatrix& raw) const;

  // Serializes back to the rules-file grammar.
  std::string to_text() const;

 private:
  void require_bound() const;

  std::vector<Rule> rules_;
  bool bound_ = false;
};

enum class Compliance : int { kNotApplicable = -1, kNotFollowed = 0, kFollowed = 1 };

struct ComplianceMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Compliance> codes;  // row-major

  Compliance at(std::size_t row, std::size_t rule) const { return codes[row * cols + rule]; }
};

// Entry (n, k): -1 when rule k does not apply to row n, +1 when the thresholded
// prediction equals the rule's consequent, 0 otherwise.
ComplianceMatrix compliance_matrix(const RuleSet& rules, const FeatureMatrix& raw,
                                   const Vector& predictions, double threshold);

struct RuleStats {
  std::string name;
  std::size_t applicable_rows = 0;
  double applicability = 0.0;           // percent of all rows
  std::optional<double> compliance;     // percent of applicable rows
  std::optional<double> rule_accuracy;  // percent of applicable rows
};

std::vector<RuleStats> rule_report(const RuleSet& rules, const FeatureMatrix& raw,
                                   const Vector& labels, const Vector& predictions,
                                   double threshold);

}  // namespace pmoe
