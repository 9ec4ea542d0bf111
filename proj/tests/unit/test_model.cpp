#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/model.hpp"

using namespace pmoe;

namespace {

MoEModel model_1d(double t0, double tb, double w0, double wb) {
  MoEModel m = MoEModel::zeros(1);
  m.theta << t0, tb;
  m.w << w0, wb;
  return m;
}

Vector x1(double v) { return Vector{{v}}; }

}  // namespace

TEST_SUITE("core_model") {
  TEST_CASE("expert and gate values") {
    MoEModel m = MoEModel::zeros(3);
    CHECK(expert_probability(m, Vector{{0.3, -2.0, 7.0}}) == 0.5);
    CHECK(gate_value(m, Vector{{0.3, -2.0, 7.0}}) == 0.5);

    CHECK(expert_probability(model_1d(1.0, 0.0, 0.0, 0.0), x1(0.0)) == 0.5);
    // High-precision value of 1 / (1 + e^-1).
    CHECK(expert_probability(model_1d(2.0, -1.0, 0.0, 0.0), x1(1.0)) ==
          doctest::Approx(0.7310585786300049).epsilon(1e-15));
    CHECK(gate_value(model_1d(0.0, 0.0, -2.0, 1.0), x1(1.0)) ==
          doctest::Approx(0.2689414213699951).epsilon(1e-15));

    const double delta = kDefaultClipDelta;
    CHECK(gate_value(model_1d(0.0, 0.0, 0.0, 500.0), x1(1.0)) == 1.0 - delta);
    CHECK(expert_probability(model_1d(0.0, -500.0, 0.0, 0.0), x1(1.0)) == delta);
  }

  TEST_CASE("dimension mismatch names both sizes") {
    MoEModel m = MoEModel::zeros(2);
    try {
      (void)expert_probability(m, Vector{{1.0, 2.0, 3.0}});
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      CHECK(e.expected() == 2);
      CHECK(e.actual() == 3);
      CHECK(std::string(e.what()).find("core_model") != std::string::npos);
    }
  }

  TEST_CASE("mixture arithmetic") {
    const double delta = kDefaultClipDelta;
    CHECK(mix(0.8, 0.25, Guideline::kPositive, delta) == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(mix(0.37, 0.9, Guideline::kNotApplicable, delta) == 0.37);
    const double saturated = mix(0.3, 1.0 - delta, Guideline::kNegative, delta);
    CHECK(saturated <= 0.3 * delta + delta);

    // predict_moe agrees with the parts.
    MoEModel m = model_1d(0.4, -0.2, 1.1, 0.3);
    const double f = expert_probability(m, x1(0.7));
    const double rho = gate_value(m, x1(0.7));
    CHECK(predict_moe(m, x1(0.7), Guideline::kPositive) == mix(f, rho, Guideline::kPositive, delta));
    CHECK(predict_moe(m, x1(0.7), Guideline::kNotApplicable) == f);
  }

  TEST_CASE("mixture stays between expert and rule") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double delta = kDefaultClipDelta;
    for (int i = 0; i < 2000; ++i) {
      const double f = clip_probability(u(rng), delta);
      const double rho = clip_probability(u(rng), delta);
      for (Guideline g : {Guideline::kNegative, Guideline::kPositive}) {
        const double p = mix(f, rho, g, delta);
        CHECK(p >= std::min<double>(f, to_int(g)) - delta);
        CHECK(p <= std::max<double>(f, to_int(g)) + delta);
      }
      // Gate pinned at its floor barely moves the expert.
      const double low = mix(f, delta, Guideline::kPositive, delta);
      CHECK(std::abs(low - f) <= delta * std::abs(1.0 - f) + 1e-15);
    }
  }

  TEST_CASE("loss examples") {
    Dataset one = fixture::dataset(FeatureMatrix::Zero(1, 1), Vector{{1.0}});
    MoEModel m = MoEModel::zeros(1);
    CHECK(loss(m, one, fixture::guideline({-1})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    // Rule exact everywhere with a saturated gate: loss is N * -ln(1 - delta).
    FeatureMatrix x(3, 1);
    x << 0.1, -0.4, 2.0;
    Dataset data = fixture::dataset(x, Vector{{1.0, 0.0, 1.0}});
    MoEModel sat = model_1d(0.0, 0.0, 0.0, 600.0);
    const double expected = 3.0 * -std::log(1.0 - kDefaultClipDelta);
    CHECK(loss(sat, data, fixture::guideline({1, 0, 1})) == doctest::Approx(expected).epsilon(1e-6));
  }

  TEST_CASE("loss matches straight-line oracle") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      auto inst = fixture::random_instance(rng, 6, 3);
      MoEModel m = fixture::random_model(rng, 3, 2.0, rep % 2 ? 0.1 : 0.0);
      const double ref = oracle::loss(m.theta, m.w, m.gamma, m.prob_clip_delta, inst.data.features,
                                      inst.data.labels, inst.g_int);
      CHECK(loss(m, inst.data, inst.g) == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  TEST_CASE("loss is permutation invariant and additive") {
    std::mt19937_64 rng(5);
    auto inst = fixture::random_instance(rng, 20, 4);
    MoEModel m = fixture::random_model(rng, 4, 1.0);
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    GuidelineVector g_perm;
    for (auto i : perm) g_perm.push_back(inst.g[i]);
    const double total = loss(m, inst.data, inst.g);
    CHECK(loss(m, inst.data.subset(perm), g_perm) == doctest::Approx(total).epsilon(1e-12));

    std::vector<std::size_t> a(perm.begin(), perm.begin() + 7), b(perm.begin() + 7, perm.end());
    GuidelineVector ga, gb;
    for (auto i : a) ga.push_back(inst.g[i]);
    for (auto i : b) gb.push_back(inst.g[i]);
    CHECK(loss(m, inst.data.subset(a), ga) + loss(m, inst.data.subset(b), gb) ==
          doctest::Approx(total).epsilon(1e-12));
  }

  TEST_CASE("gradient special cases") {
    std::mt19937_64 rng(8);
    auto inst = fixture::random_instance(rng, 10, 3);
    MoEModel m = fixture::random_model(rng, 3, 1.0, 0.3);
    m.w[1] = 0.0;
    const GuidelineVector none(10, Guideline::kNotApplicable);
    const Gradients g = loss_gradients(m, inst.data, none);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double expected = m.w[j] > 0 ? 0.3 : (m.w[j] < 0 ? -0.3 : 0.0);
      CHECK(g.w[j] == expected);
    }
    CHECK(g.w[3] == 0.0);

    // Expert agrees with the rule on every applicable row: no data term in w.
    MoEModel flat = MoEModel::zeros(3);
    flat.theta[3] = 50.0;  // f = 1 - delta everywhere
    flat.w = oracle::random_vector(rng, 4, 1.0);
    // Clipping keeps f a distance delta from g, so the term is O(delta) for
    // rows whose label matches.
    Dataset agree = inst.data;
    agree.labels.setOnes();
    const GuidelineVector ones(10, Guideline::kPositive);
    const Gradients gf = data_loss_gradients(flat, agree, ones);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(std::abs(gf.w[j]) < 1e-5);
  }

  TEST_CASE("gradients match finite differences at random smooth points") {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> dims(1, 5), rows(2, 20);
    for (int rep = 0; rep < 100; ++rep) {
      const int d = dims(rng);
      auto inst = fixture::random_instance(rng, rows(rng), d);
      MoEModel m = fixture::random_model(rng, d, 1.5, rep % 2 ? 0.1 : 0.0);
      fixture::away_from_kink(m.w, 1e-3);
      const auto p = m.theta.size();
      auto f = [&](const Vector& v) {
        return oracle::loss(v.head(p), v.tail(p), m.gamma, m.prob_clip_delta, inst.data.features,
                            inst.data.labels, inst.g_int);
      };
      Vector packed(2 * p);
      packed << m.theta, m.w;
      const Vector numeric = oracle::numeric_gradient(f, packed, 1e-6);
      const Gradients g = loss_gradients(m, inst.data, inst.g);
      Vector analytic(2 * p);
      analytic << g.theta, g.w;
      for (Eigen::Index j = 0; j < analytic.size(); ++j) {
        const double scale = std::max({1.0, std::abs(analytic[j]), std::abs(numeric[j])});
        CHECK(std::abs(analytic[j] - numeric[j]) / scale < 1e-5);
      }
    }
  }

  TEST_CASE("log-sigmoid is concave along parameter segments") {
    std::mt19937_64 rng(4);
    const FeatureMatrix x = oracle::random_features(rng, 30, 3);
    for (int rep = 0; rep < 40; ++rep) {
      const Vector a = oracle::random_vector(rng, 4, 4.0);
      const Vector b = oracle::random_vector(rng, 4, 4.0);
      for (Eigen::Index n = 0; n < x.rows(); ++n) {
        auto h = [&](double t) {
          const Vector theta = (1.0 - t) * a + t * b;
          return log_sigmoid(oracle::dot_aug(theta, x, n));
        };
        for (double t = 0.05; t < 0.96; t += 0.05) {
          const double step = 1e-3;
          const double second = (h(t + step) - 2.0 * h(t) + h(t - step)) / (step * step);
          CHECK(second <= 1e-8);
        }
      }
    }
  }

  TEST_CASE("norm cap rescales only when exceeded") {
    Vector v{{3.0, 4.0}};
    CHECK_FALSE(enforce_norm_cap(v, 5.0));
    CHECK(v == Vector{{3.0, 4.0}});
    CHECK(enforce_norm_cap(v, 1.0));
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("model and dataset validation") {
    MoEModel m = MoEModel::zeros(2);
    m.gamma = -1.0;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.gamma = 0.0;
    m.prob_clip_delta = 0.5;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    m.prob_clip_delta = kDefaultClipDelta;
    m.reference_loss = 0.0;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);

    Dataset bad = fixture::dataset(FeatureMatrix::Zero(2, 1), Vector{{0.0, 2.0}});
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    Dataset nan = fixture::dataset(FeatureMatrix::Constant(2, 1, std::nan("")), Vector{{0.0, 1.0}});
    CHECK_THROWS_AS(nan.validate(), InvalidArgument);
  }
}
