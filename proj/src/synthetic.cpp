#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "pmoe/data_io.hpp"
#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Expected class-1 fraction for a given intercept, with in-region labels
// replaced by `consequent` at rate alpha.
double expected_rate(const Vector& logits, const std::vector<bool>& in_region, double intercept,
                     double alpha, int consequent) {
  double total = 0.0;
  for (Eigen::Index n = 0; n < logits.size(); ++n) {
    const double p = sigmoid(logits[n] + intercept);
    total += in_region[static_cast<std::size_t>(n)] ? alpha * consequent + (1.0 - alpha) * p : p;
  }
  return total / static_cast<double>(logits.size());
}

// Bisection for the intercept hitting `target`; clamps at the bracket ends.
double solve_intercept(const Vector& logits, const std::vector<bool>& in_region, double alpha,
                       int consequent, double target, bool& attainable) {
  double lo = -60.0;
  double hi = 60.0;
  const double at_lo = expected_rate(logits, in_region, lo, alpha, consequent);
  const double at_hi = expected_rate(logits, in_region, hi, alpha, consequent);
  attainable = target >= at_lo - 1e-9 && target <= at_hi + 1e-9;
  if (target <= at_lo) return lo;
  if (target >= at_hi) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (expected_rate(logits, in_region, mid, alpha, consequent) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void SynthConfig::validate() const {
  if (n < 1 || d < 1) throw InvalidArgument("data_io", "synthetic data needs n >= 1 and d >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("data_io", "alpha must lie in [0, 1]");
  if (!(class_balance > 0.0 && class_balance < 1.0)) {
    throw InvalidArgument("data_io", "class_balance must lie in (0, 1)");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("data_io", "noise_sigma must be >= 0");
  if (!truth_weights.empty() && truth_weights.size() != d) {
    throw InvalidArgument("data_io", "truth_weights must have length d");
  }
  if (region_lower.size() != region_upper.size() ||
      (!region_lower.empty() && region_lower.size() != d)) {
    throw InvalidArgument("data_io", "region bounds must both be empty or have length d");
  }
  bool bounded = region_lower.empty();
  for (std::size_t j = 0; j < region_lower.size(); ++j) {
    if (!(region_lower[j] <= region_upper[j])) {
      throw InvalidArgument("data_io", "region lower bound exceeds upper bound");
    }
    bounded = bounded || std::isfinite(region_lower[j]) || std::isfinite(region_upper[j]);
  }
  if (!bounded) throw InvalidArgument("data_io", "rule region needs at least one finite bound");
}

SynthConfig regime_config(Regime regime, std::size_t n, std::size_t d, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.d = d;
  cfg.seed = seed;
  switch (regime) {
    case Regime::kA:
      cfg.alpha = 0.0;
      cfg.consequent = ConsequentMode::kMajority;
      break;
    case Regime::kB:
      cfg.alpha = 1.0;
      cfg.consequent = ConsequentMode::kPositive;
      break;
    case Regime::kAdversarial:
      cfg.alpha = 0.0;
      cfg.consequent = ConsequentMode::kMinority;
      break;
  }
  return cfg;
}

std::string GroundTruth::to_text() const {
  std::ostringstream out;
  out << "weights:";
  for (double w : weights) out << ' ' << fmt(w);
  out << '\n';
  out << "intercept: " << fmt(intercept) << '\n';
  out << "consequent: " << consequent << '\n';
  out << "alpha: " << fmt(alpha) << '\n';
  out << "in_region_rows: " << in_region_rows << '\n';
  out << "empty_region: " << (empty_region ? "true" : "false") << '\n';
  out << "balance_attainable: " << (balance_attainable ? "true" : "false") << '\n';
  out << "expected_positive_rate: " << fmt(expected_positive_rate) << '\n';
  out << "realized_positive_rate: " << fmt(realized_positive_rate) << '\n';
  out << "in_region_base_rate: " << fmt(in_region_base_rate) << '\n';
  return out.str();
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto d = static_cast<Eigen::Index>(cfg.d);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<double> lower = cfg.region_lower;
  std::vector<double> upper = cfg.region_upper;
  if (lower.empty()) {
    lower.assign(cfg.d, -kInf);
    upper.assign(cfg.d, kInf);
    lower[0] = 0.5;
  }

  GroundTruth truth;
  truth.alpha = cfg.alpha;
  truth.weights = cfg.truth_weights;
  if (truth.weights.empty()) {
    for (std::size_t j = 0; j < cfg.d; ++j) truth.weights.push_back(normal(rng));
  }

  // Draw order is fixed: features, logit noise, base-label uniforms,
  // replacement uniforms.
  FeatureMatrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  Vector logits(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) z += truth.weights[static_cast<std::size_t>(j)] * x(i, j);
    logits[i] = z + cfg.noise_sigma * normal(rng);
  }
  std::vector<double> u_base(cfg.n), u_replace(cfg.n);
  for (auto& u : u_base) u = uniform(rng);
  for (auto& u : u_replace) u = uniform(rng);

  std::vector<bool> in_region(cfg.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bool inside = true;
    for (Eigen::Index j = 0; j < d && inside; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      inside = x(i, j) >= lower[ju] && x(i, j) <= upper[ju];
    }
    in_region[static_cast<std::size_t>(i)] = inside;
    truth.in_region_rows += inside ? 1 : 0;
  }
  truth.empty_region = truth.in_region_rows == 0;

  // The consequent for majority/minority modes is read off the latent truth
  // at the intercept that balances classes without replacement.
  int consequent = cfg.consequent == ConsequentMode::kNegative ? 0 : 1;
  if (cfg.consequent == ConsequentMode::kMajority || cfg.consequent == ConsequentMode::kMinority) {
    bool ignored = true;
    const double b0 = solve_intercept(logits, in_region, 0.0, 1, cfg.class_balance, ignored);
    double inside_mean = 0.5;
    if (!truth.empty_region) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (in_region[static_cast<std::size_t>(i)]) s += sigmoid(logits[i] + b0);
      }
      inside_mean = s / static_cast<double>(truth.in_region_rows);
    }
    const int majority = inside_mean >= 0.5 ? 1 : 0;
    consequent = cfg.consequent == ConsequentMode::kMajority ? majority : 1 - majority;
  }
  truth.consequent = consequent;
  truth.intercept = solve_intercept(logits, in_region, cfg.alpha, consequent, cfg.class_balance,
                                    truth.balance_attainable);
  truth.expected_positive_rate =
      expected_rate(logits, in_region, truth.intercept, cfg.alpha, consequent);

  Dataset data;
  data.features = x;
  data.labels.resize(n);
  double inside_base = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double p = sigmoid(logits[i] + truth.intercept);
    double y = u_base[iu] < p ? 1.0 : 0.0;
    if (in_region[iu]) {
      inside_base += consequent == 1 ? p : 1.0 - p;
      if (u_replace[iu] < cfg.alpha) y = consequent;
    }
    data.labels[i] = y;
  }
  truth.in_region_base_rate =
      truth.empty_region ? 0.0 : inside_base / static_cast<double>(truth.in_region_rows);
  truth.realized_positive_rate = data.labels.mean();
  for (Eigen::Index j = 0; j < d; ++j) data.columns.push_back("x" + std::to_string(j));

  Rule rule;
  rule.name = "synthetic_region";
  rule.consequent = consequent;
  rule.antecedent.any_of.emplace_back();
  for (std::size_t j = 0; j < cfg.d; ++j) {
    if (std::isfinite(lower[j])) {
      rule.antecedent.any_of[0].push_back({data.columns[j], Comparison::kGreaterEqual, lower[j]});
    }
    if (std::isfinite(upper[j])) {
      rule.antecedent.any_of[0].push_back({data.columns[j], Comparison::kLessEqual, upper[j]});
    }
  }
  SyntheticData out;
  out.rules = RuleSet({rule}).bind(data.columns);
  out.data = std::move(data);
  out.truth = std::move(truth);
  return out;
}

}  // namespace pmoe
