#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "pmoe/errors.hpp"
#include "pmoe/rules.hpp"

using namespace pmoe;

namespace {

const char* kMdd =
    "# depression guideline\n"
    "rule promote : if anxiety >= 1 or insomnia >= 1 then predict 1\n"
    "rule weight : if overweight >= 1 then predict 0\n";

const std::vector<std::string> kMddSchema = {"anxiety", "insomnia", "overweight"};

}  // namespace

TEST_SUITE("rules") {
  TEST_CASE("first match over all binary inputs") {
    const RuleSet rs = RuleSet::parse(kMdd).bind(kMddSchema);
    REQUIRE(rs.size() == 2);
    for (int bits = 0; bits < 8; ++bits) {
      const double a = bits & 1, i = (bits >> 1) & 1, o = (bits >> 2) & 1;
      int expected = -1;
      if (a >= 1 || i >= 1) {
        expected = 1;
      } else if (o >= 1) {
        expected = 0;
      }
      CHECK(to_int(rs.evaluate(Vector{{a, i, o}})) == expected);
    }
    CHECK(rs.evaluate(Vector{{1.0, 0.0, 0.0}}) == Guideline::kPositive);
    CHECK(rs.evaluate(Vector{{0.0, 0.0, 0.0}}) == Guideline::kNotApplicable);
    CHECK(rs.evaluate(Vector{{1.0, 0.0, 1.0}}) == Guideline::kPositive);
  }

  TEST_CASE("and binds tighter than or") {
    const RuleSet rs =
        RuleSet::parse("rule r : if a > 0 and b > 0 or c > 0 then predict 1").bind({"a", "b", "c"});
    CHECK(rs.evaluate(Vector{{1.0, 1.0, 0.0}}) == Guideline::kPositive);
    CHECK(rs.evaluate(Vector{{1.0, 0.0, 0.0}}) == Guideline::kNotApplicable);
    CHECK(rs.evaluate(Vector{{0.0, 0.0, 1.0}}) == Guideline::kPositive);
  }

  TEST_CASE("comparison operators and equality tolerance") {
    const auto eval = [](const char* clause, double x) {
      const std::string text = std::string("rule r : if v ") + clause + " then predict 1";
      return RuleSet::parse(text).bind({"v"}).evaluate(Vector{{x}}) == Guideline::kPositive;
    };
    CHECK(eval("< 2", 1.5));
    CHECK_FALSE(eval("< 2", 2.0));
    CHECK(eval("<= 2", 2.0));
    CHECK(eval("> 2", 2.5));
    CHECK_FALSE(eval("> 2", 2.0));
    CHECK(eval(">= 2", 2.0));
    CHECK(eval("= 2", 2.0));
    CHECK_FALSE(eval("= 2", 2.0 + 1e-12));
    CHECK(eval("= 0.3", 0.3 + 5e-10));
    CHECK_FALSE(eval("= 0.3", 0.3 + 5e-9));
    CHECK(eval(">= -1.5e-1", -0.15));
  }

  TEST_CASE("avoid rules store the complementary label") {
    const RuleSet rs = RuleSet::parse("rule r : if v > 0 then avoid 1").bind({"v"});
    CHECK(rs.rules()[0].kind == RuleKind::kAvoid);
    CHECK(rs.evaluate(Vector{{1.0}}) == Guideline::kNegative);
  }

  TEST_CASE("parse errors carry positions") {
    auto expect_error = [](const std::string& text, std::size_t line, std::size_t column) {
      try {
        (void)RuleSet::parse(text);
        FAIL("expected ParseError for: " << text);
      } catch (const ParseError& e) {
        CHECK(e.line() == line);
        CHECK(e.column() == column);
      }
    };
    expect_error("rule r : if v > 0 then predict 2", 1, 32);
    expect_error("\nrule r : if v > 0 then guess 1", 2, 24);
    expect_error("rule r : if v ! 0 then predict 1", 1, 15);
    expect_error("rule r if v > 0 then predict 1", 1, 8);
    expect_error("rule r : if v > 0 then predict 1\nrule r : if v < 0 then predict 0", 2, 1);
    expect_error("rule r : if v > 0 then predict 1 extra", 1, 34);
    expect_error("rule r : if v > abc then predict 1", 1, 17);
  }

  TEST_CASE("comments, blank lines and CRLF") {
    const RuleSet rs = RuleSet::parse("\xEF\xBB\xBF# header\r\n\r\n  # indented\r\n"
                                      "rule r : if v > 0 then predict 1\r\n");
    CHECK(rs.size() == 1);
  }

  TEST_CASE("unknown features fail at bind time") {
    const RuleSet rs = RuleSet::parse(kMdd);
    CHECK_THROWS_AS(rs.bind({"anxiety", "insomnia"}), SchemaError);
    CHECK_THROWS_AS(rs.evaluate(Vector{{0.0, 0.0, 0.0}}), SchemaError);
  }

  TEST_CASE("text round trip") {
    const RuleSet rs = RuleSet::parse(kMdd + std::string("rule av : if x < -0.25 then avoid 0\n"));
    const RuleSet again = RuleSet::parse(rs.to_text());
    CHECK(again.to_text() == rs.to_text());
    const auto schema = std::vector<std::string>{"anxiety", "insomnia", "overweight", "x"};
    const RuleSet a = rs.bind(schema), b = again.bind(schema);
    std::mt19937_64 rng(1);
    const FeatureMatrix x = oracle::random_features(rng, 200, 4);
    CHECK(a.evaluate(x) == b.evaluate(x));
  }

  TEST_CASE("reordering non-overlapping rules keeps g") {
    const RuleSet ab = RuleSet::parse("rule a : if v > 1 then predict 1\nrule b : if v < -1 then predict 0")
                           .bind({"v"});
    const RuleSet ba = RuleSet::parse("rule b : if v < -1 then predict 0\nrule a : if v > 1 then predict 1")
                           .bind({"v"});
    std::mt19937_64 rng(2);
    const FeatureMatrix x = 2.0 * oracle::random_features(rng, 100, 1);
    CHECK(ab.evaluate(x) == ba.evaluate(x));
  }

  TEST_CASE("compliance matrix truth table") {
    const RuleSet rs = RuleSet::parse("rule p : if a >= 1 then predict 1\nrule q : if b >= 1 then predict 0")
                           .bind({"a", "b"});
    FeatureMatrix x(4, 2);
    x << 0, 0,  //
        1, 0,   //
        0, 1,   //
        1, 1;
    const Vector pred{{0.9, 0.9, 0.9, 0.2}};
    const ComplianceMatrix m = compliance_matrix(rs, x, pred, 0.5);
    const int expected[4][2] = {{-1, -1}, {1, -1}, {-1, 0}, {0, 1}};
    for (std::size_t n = 0; n < 4; ++n) {
      for (std::size_t k = 0; k < 2; ++k) CHECK(static_cast<int>(m.at(n, k)) == expected[n][k]);
    }
    // g = -1 exactly when every code on the row is -1.
    const auto g = rs.evaluate(x);
    for (std::size_t n = 0; n < 4; ++n) {
      const bool all_na = m.at(n, 0) == Compliance::kNotApplicable && m.at(n, 1) == Compliance::kNotApplicable;
      CHECK(all_na == (g[n] == Guideline::kNotApplicable));
    }
    CHECK_THROWS_AS(compliance_matrix(rs, x, pred, 1.0), InvalidArgument);
  }

  TEST_CASE("rule report against a recount") {
    const RuleSet rs = RuleSet::parse("rule p : if a > 0 then predict 1\nrule never : if a > 100 then predict 0\n"
                                      "rule all : if a > -100 then predict 0")
                           .bind({"a"});
    std::mt19937_64 rng(9);
    const FeatureMatrix x = oracle::random_features(rng, 20, 1);
    const Vector pred = oracle::random_vector(rng, 20, 0.5).array() + 0.5;
    Vector y(20);
    for (Eigen::Index n = 0; n < 20; ++n) y[n] = pred[n] > 0.4 ? 1.0 : 0.0;
    const auto stats = rule_report(rs, x, y, pred, 0.5);
    REQUIRE(stats.size() == 3);

    int app = 0, follow = 0, correct = 0;
    for (Eigen::Index n = 0; n < 20; ++n) {
      if (!(x(n, 0) > 0)) continue;
      ++app;
      follow += pred[n] >= 0.5 ? 1 : 0;
      correct += y[n] == 1.0 ? 1 : 0;
    }
    CHECK(stats[0].applicable_rows == static_cast<std::size_t>(app));
    CHECK(stats[0].applicability == doctest::Approx(100.0 * app / 20.0));
    CHECK(*stats[0].compliance == doctest::Approx(100.0 * follow / app));
    CHECK(*stats[0].rule_accuracy == doctest::Approx(100.0 * correct / app));

    CHECK(stats[1].applicability == 0.0);
    CHECK_FALSE(stats[1].compliance.has_value());
    CHECK_FALSE(stats[1].rule_accuracy.has_value());

    CHECK(stats[2].applicability == 100.0);
    const Vector zeros = Vector::Zero(20);
    CHECK(*rule_report(rs, x, y, zeros, 0.5)[2].compliance == 100.0);
  }
}
