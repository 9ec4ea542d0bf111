#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "pmoe/data_io.hpp"
#include "pmoe/model.hpp"

namespace fixture {

inline pmoe::Dataset dataset(const pmoe::FeatureMatrix& x, const pmoe::Vector& y) {
  pmoe::Dataset data;
  data.features = x;
  data.labels = y;
  for (Eigen::Index j = 0; j < x.cols(); ++j) data.columns.push_back("x" + std::to_string(j));
  return data;
}

inline pmoe::GuidelineVector guideline(const std::vector<int>& g) {
  pmoe::GuidelineVector out;
  for (int v : g) out.push_back(static_cast<pmoe::Guideline>(v));
  return out;
}

// Random instance: Gaussian features, Bernoulli(0.5) labels, guideline values
// uniform over {-1, 0, 1}.
struct Instance {
  pmoe::Dataset data;
  std::vector<int> g_int;
  pmoe::GuidelineVector g;
};

inline Instance random_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  std::uniform_int_distribution<int> gpick(-1, 1);
  std::bernoulli_distribution coin(0.5);
  Instance inst;
  pmoe::Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = coin(rng) ? 1.0 : 0.0;
  inst.data = dataset(oracle::random_features(rng, n, d), y);
  for (Eigen::Index i = 0; i < n; ++i) inst.g_int.push_back(gpick(rng));
  inst.g = guideline(inst.g_int);
  return inst;
}

inline pmoe::MoEModel random_model(std::mt19937_64& rng, Eigen::Index d, double scale,
                                   double gamma = 0.0) {
  pmoe::MoEModel m = pmoe::MoEModel::zeros(static_cast<std::size_t>(d));
  m.theta = oracle::random_vector(rng, d + 1, scale);
  m.w = oracle::random_vector(rng, d + 1, scale);
  m.gamma = gamma;
  return m;
}

// Pushes every non-bias |w_j| at least `margin` away from zero.
inline void away_from_kink(pmoe::Vector& w, double margin) {
  for (Eigen::Index j = 0; j + 1 < w.size(); ++j) {
    if (std::abs(w[j]) < margin) w[j] = w[j] < 0.0 ? -margin : margin;
  }
}

// Standardized synthetic split used by solver and acceptance tests.
struct SynthRun {
  pmoe::SyntheticData synth;
  pmoe::Dataset train, test;
  pmoe::GuidelineVector g_train, g_test;
};

inline SynthRun synth_run(pmoe::Regime regime, std::size_t n, std::size_t d, std::uint64_t seed) {
  pmoe::SynthConfig cfg = pmoe::regime_config(regime, n, d, seed);
  cfg.truth_weights.assign(d, 0.0);
  // A strong first weight lets the expert alone explain the rule region; in
  // regime B the rule should carry information the expert lacks.
  const double first = regime == pmoe::Regime::kB ? 1.0 : 3.5;
  const double base[] = {first, 1.0, -1.0, 0.5};
  for (std::size_t j = 0; j < d && j < 4; ++j) cfg.truth_weights[j] = base[j];
  SynthRun run;
  run.synth = pmoe::generate_synthetic(cfg);
  const auto g = run.synth.rules.evaluate(run.synth.data.features);
  pmoe::SplitSpec spec;
  spec.seed = seed;
  const pmoe::DataSplit split = pmoe::split_dataset(run.synth.data, spec);
  const auto record = pmoe::fit_standardization(split.train.features);
  run.train = pmoe::apply_standardization(split.train, record);
  run.test = pmoe::apply_standardization(split.test, record);
  for (auto i : split.train_index) run.g_train.push_back(g[i]);
  for (auto i : split.test_index) run.g_test.push_back(g[i]);
  return run;
}

}  // namespace fixture
