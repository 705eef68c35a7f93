#include <doctest.h>

#include <cmath>

#include "feval/baselines.hpp"
#include "feval/errors.hpp"
#include "feval/random.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace feval;
using feval::testing::bisection_normal_quantile;
using feval::testing::quadrature_normal_cdf;

TEST_CASE("null and chance baselines") {
  const auto zeros = null_effect_predictions(53);
  CHECK(zeros.size() == 53);
  CHECK(zeros.isZero(0.0));
  CHECK(null_effect_predictions(1).size() == 1);
  const auto half = random_chance_predictions(44);
  CHECK(half.size() == 44);
  CHECK((half.array() == 0.5).all());
  CHECK_THROWS_AS(null_effect_predictions(0), DomainError);
}

TEST_CASE("null replication model predicts alpha / 2") {
  CHECK(null_replication_predictions(10, 0.05)[3] == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(null_replication_predictions(1, 0.10)[0] == doctest::Approx(0.05).epsilon(1e-12));
  for (double alpha : {0.01, 0.05, 0.1, 0.5}) {
    CHECK(replication_probability(0.0, 37.0, alpha) ==
          doctest::Approx(null_replication_predictions(1, alpha)[0]).epsilon(1e-14));
  }
}

TEST_CASE("replication probability") {
  const double c = bisection_normal_quantile(0.975);
  CHECK(replication_probability(c / std::sqrt(250.0), 250.0, 0.05) == doctest::Approx(0.5).epsilon(1e-12));
  const double oracle = quadrature_normal_cdf(3.0 - c);
  CHECK(oracle == doctest::Approx(0.8508).epsilon(1e-4));
  CHECK(replication_probability(0.3, 100.0, 0.05) == doctest::Approx(oracle).epsilon(1e-10));
  CHECK_THROWS_AS(replication_probability(0.1, 0.5, 0.05), DomainError);
}

TEST_CASE("replication probability is monotone in the effect and in n") {
  double prev = -1.0;
  for (int i = 0; i < 100; ++i) {
    const double mu = -1.0 + 2.0 * i / 99.0;
    const double p = replication_probability(mu, 50.0, 0.05);
    CHECK(p >= prev);
    prev = p;
  }
  prev = -1.0;
  for (double n = 1.0; n <= 1000.0; n *= 1.5) {
    const double p = replication_probability(0.05, n, 0.05);
    CHECK(p >= prev);
    prev = p;
  }
}

// ---------------------------------------------------------------------------

namespace {

EffortConditionSpec piece_rate(double own, double charity = 0.0) {
  EffortConditionSpec c;
  c.condition_id = "c";
  c.incentive_kind = charity > 0.0 ? IncentiveKind::piece_rate_charity : IncentiveKind::piece_rate_self;
  c.own_cents_per_100 = own;
  c.charity_cents_per_100 = charity;
  return c;
}

const std::array<EffortAnchor, 3> kAnchors{{{0.0, 1521.0}, {1.0, 2029.0}, {10.0, 2175.0}}};

}  // namespace

TEST_CASE("interpolation is exact at the anchors in both modes") {
  for (auto mode : {InterpolationMode::selfish, InterpolationMode::altruistic}) {
    for (const auto& a : kAnchors) {
      CHECK(linear_interpolation_predictions({piece_rate(a.payment)}, kAnchors, mode)[0] == a.points);
    }
  }
}

TEST_CASE("interpolation between and beyond anchors") {
  const double a1 = kAnchors[1].points;
  const double a2 = kAnchors[2].points;
  const auto mid = linear_interpolation_predictions({piece_rate(5.5)}, kAnchors, InterpolationMode::selfish);
  CHECK(mid[0] == doctest::Approx(a1 + 4.5 / 9.0 * (a2 - a1)).epsilon(1e-14));
  const auto far = linear_interpolation_predictions({piece_rate(19.0)}, kAnchors, InterpolationMode::selfish);
  CHECK(far[0] == doctest::Approx(a2 + (a2 - a1)).epsilon(1e-14));
  const auto low = linear_interpolation_predictions({piece_rate(0.5)}, kAnchors, InterpolationMode::selfish);
  CHECK(low[0] == doctest::Approx(0.5 * (kAnchors[0].points + a1)).epsilon(1e-14));
}

TEST_CASE("charity pay counts only in altruistic mode") {
  const std::vector<EffortConditionSpec> charity{piece_rate(0.0, 1.0)};
  CHECK(linear_interpolation_predictions(charity, kAnchors, InterpolationMode::selfish)[0] ==
        kAnchors[0].points);
  CHECK(linear_interpolation_predictions(charity, kAnchors, InterpolationMode::altruistic)[0] ==
        kAnchors[1].points);

  EffortConditionSpec other;
  other.incentive_kind = IncentiveKind::other;
  other.own_cents_per_100 = 4.0;
  const std::vector<EffortConditionSpec> plain{piece_rate(0.0), piece_rate(3.0), piece_rate(40.0), other};
  const auto s = linear_interpolation_predictions(plain, kAnchors, InterpolationMode::selfish);
  const auto a = linear_interpolation_predictions(plain, kAnchors, InterpolationMode::altruistic);
  CHECK(s == a);
  CHECK(s[3] == kAnchors[0].points);
}

TEST_CASE("interpolation errors") {
  CHECK_THROWS_AS(linear_interpolation_predictions({piece_rate(-1.0)}, kAnchors, InterpolationMode::selfish),
                  DomainError);
  const std::array<EffortAnchor, 3> unsorted{{{0.0, 1.0}, {10.0, 2.0}, {1.0, 3.0}}};
  CHECK_THROWS_AS(linear_interpolation_predictions({piece_rate(1.0)}, unsorted, InterpolationMode::selfish),
                  DomainError);
}

TEST_CASE("effort condition file") {
  feval::testing::TempDir dir;
  const auto ok = dir.write("c.csv",
                            "condition_id,incentive_kind,own_cents_per_100,charity_cents_per_100\n"
                            "p1,piece_rate_self,1,0\nr1,piece_rate_charity,0,1\npeer,other,0,0\n");
  const auto conds = load_effort_conditions(ok);
  REQUIRE(conds.size() == 3);
  CHECK(conds[1].incentive_kind == IncentiveKind::piece_rate_charity);
  CHECK(conds[1].charity_cents_per_100 == 1.0);
  const auto bad = dir.write("b.csv",
                             "condition_id,incentive_kind,own_cents_per_100,charity_cents_per_100\n"
                             "p1,piece_rate_self,1,0\nx,bonus,0,0\n");
  try {
    load_effort_conditions(bad);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.row() == 2u);
    CHECK(e.column() == "incentive_kind");
  }
  const auto negative = dir.write("n.csv",
                                  "condition_id,incentive_kind,own_cents_per_100,charity_cents_per_100\n"
                                  "p1,piece_rate_self,-1,0\n");
  CHECK_THROWS_AS(load_effort_conditions(negative), ValidationError);
}

// ---------------------------------------------------------------------------

namespace {

struct RegressionData {
  Eigen::VectorXd original;
  Eigen::VectorXd y_star;
  Eigen::VectorXd n;
  Eigen::VectorXd alpha;
};

// Y* = slope * original + N(0, noise_sd^2), originals spread over [0.05, 0.8].
RegressionData linear_data(Eigen::Index k, double slope, double noise_sd, double n, std::uint64_t seed) {
  Rng rng(seed);
  RegressionData d;
  d.original.resize(k);
  d.y_star.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    d.original[i] = 0.05 + 0.75 * static_cast<double>(i) / static_cast<double>(k - 1);
    d.y_star[i] = slope * d.original[i] + noise_sd * rng.normal();
  }
  d.n = Eigen::VectorXd::Constant(k, n);
  d.alpha = Eigen::VectorXd::Constant(k, 0.05);
  return d;
}

}  // namespace

TEST_CASE("Gibbs regression matches the closed form within Monte Carlo tolerance") {
  RegressionData d = linear_data(40, 0.5, 0.1, 100.0, 7);
  d.original[10] = 0.4;
  const auto fit = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 10000, 3);
  const double c = bisection_normal_quantile(0.975);
  const double plug_in = quadrature_normal_cdf(std::sqrt(100.0) * 0.2 - c);
  CHECK(plug_in == doctest::Approx(0.516).epsilon(1e-3));
  CHECK(std::abs(fit.mean_probability[10] - plug_in) < 0.05);
  CHECK(fit.beta_hat[1] == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("Gibbs regression outputs") {
  const RegressionData d = linear_data(25, 0.4, 0.1, 80.0, 11);
  const auto fit = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 2000, 5);
  CHECK(fit.probability_draws.rows() == 2000);
  CHECK(fit.probability_draws.cols() == 25);
  CHECK(fit.prediction_draws.rows() == 2000);
  CHECK((fit.mean_probability.array() > 0.0).all());
  CHECK((fit.mean_probability.array() < 1.0).all());
  CHECK((fit.prediction_draws.array() > 0.0).all());
  CHECK((fit.prediction_draws.array() < 1.0).all());
  CHECK(fit.mean_probability.isApprox(fit.probability_draws.colwise().mean().transpose()));
  // conditional expectations average to the same curve as the raw draws
  const Eigen::VectorXd cond = fit.prediction_draws.colwise().mean().transpose();
  CHECK((cond - fit.mean_probability).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("Gibbs regression is deterministic in the seed") {
  const RegressionData d = linear_data(12, 0.3, 0.2, 60.0, 2);
  const auto a = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 500, 99);
  const auto b = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 500, 99);
  const auto c = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 500, 100);
  CHECK(a.probability_draws == b.probability_draws);
  CHECK(a.prediction_draws == b.prediction_draws);
  CHECK(a.mean_probability == b.mean_probability);
  CHECK(a.probability_draws != c.probability_draws);
}

TEST_CASE("zero effects hit the variance floor and predict alpha / 2") {
  RegressionData d = linear_data(20, 0.0, 0.0, 10000.0, 1);
  const auto fit = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 1000, 4);
  CHECK(fit.variance_floor_hit_rate == 1.0);
  for (Eigen::Index k = 0; k < fit.mean_probability.size(); ++k) {
    CHECK(fit.mean_probability[k] == doctest::Approx(0.025).epsilon(0.01));
  }
}

TEST_CASE("larger replications weakly raise the mean probability for positive effects") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RegressionData d = linear_data(30, 0.5, 0.01, 50.0, seed);
    REQUIRE((d.y_star.array() > 0.0).all());
    const auto small = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 3000, seed);
    d.n *= 4.0;
    const auto large = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 3000, seed);
    CHECK(large.mean_probability.mean() >= small.mean_probability.mean() - 0.02);
  }
}

TEST_CASE("parameter uncertainty pulls probabilities toward one half") {
  const RegressionData d = linear_data(30, 0.5, 0.15, 100.0, 21);
  const auto fit = gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 5000, 8);
  const auto plug = plug_in_regression_probabilities(d.original, d.y_star, d.n, d.alpha);
  const double gibbs_spread = (fit.mean_probability.array() - 0.5).abs().mean();
  const double plug_spread = (plug.array() - 0.5).abs().mean();
  CHECK(gibbs_spread <= plug_spread);
}

TEST_CASE("Gibbs regression errors") {
  const RegressionData d = linear_data(10, 0.5, 0.1, 100.0, 1);
  CHECK_THROWS_AS(gibbs_regression_replication(d.original.head(2), d.y_star.head(2), d.n.head(2),
                                               d.alpha.head(2), 500, 1),
                  DomainError);
  CHECK_THROWS_AS(gibbs_regression_replication(Eigen::VectorXd::Constant(10, 0.3), d.y_star, d.n, d.alpha,
                                               500, 1),
                  DomainError);
  CHECK_THROWS_AS(gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 99, 1), DomainError);
  CHECK_NOTHROW(gibbs_regression_replication(d.original, d.y_star, d.n, d.alpha, 100, 1));
}
