#include <doctest.h>

#include <cmath>
#include <sstream>

#include "feval/csv.hpp"
#include "feval/data_model.hpp"
#include "feval/errors.hpp"
#include "feval/random.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using namespace feval;
using feval::testing::TempDir;

namespace {

// Expects a ValidationError and returns it for inspection.
template <typename F>
ValidationError expect_validation_error(F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e;
  }
  FAIL("expected a ValidationError");
  return ValidationError("unreachable");
}

ReplicationDataset one_study(double p, int direction, int n) {
  Eigen::MatrixXd probs(1, 1);
  probs << 0.6;
  return ReplicationDataset({"s"}, Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXi::Constant(1, n),
                            Eigen::VectorXd::Constant(1, p), Eigen::VectorXi::Constant(1, direction),
                            Eigen::VectorXd::Constant(1, 0.05),
                            ForecastMatrix::dense({"s"}, {"f"}, probs));
}

}  // namespace

TEST_CASE("effect study with a variance column") {
  TempDir dir;
  const auto effects = dir.write("effects.csv",
                                 "treatment_id,estimate,variance\n"
                                 "a,0.5,0.04\n"
                                 "b,-1.25,0.09\n");
  const auto forecasts = dir.write("forecasts.csv",
                                   "treatment_id,forecaster_id,prediction\n"
                                   "a,x,1\na,y,2\na,z,3\n"
                                   "b,x,-1\nb,y,0\nb,z,0.5\n");
  const EffectStudy study = load_effect_study(effects, forecasts);
  CHECK(study.effects.size() == 2);
  CHECK(study.effects.is_diagonal());
  CHECK(study.effects.covariance()(1, 1) == 0.09);
  CHECK(study.effects.covariance()(0, 1) == 0.0);
  CHECK(study.forecasts.treatments() == 2);
  CHECK(study.forecasts.forecasters() == 3);
  CHECK(study.forecasts.predictions()(1, 2) == 0.5);
  CHECK(study.forecasts.observed_count() == 6);
}

TEST_CASE("forecasts are aligned to the effects order and absent pairs are missing") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\nb,1,1\na,2,1\n");
  const auto forecasts = dir.write("forecasts.csv",
                                   "treatment_id,forecaster_id,prediction,group\n"
                                   "a,x,5,novice\nb,y,7,expert\nb,x,6,novice\n");
  const EffectStudy study = load_effect_study(effects, forecasts);
  CHECK(study.forecasts.treatment_ids() == std::vector<std::string>{"b", "a"});
  CHECK(study.forecasts.predictions()(1, 0) == 5.0);
  CHECK_FALSE(study.forecasts.is_observed(1, 1));
  CHECK(std::isnan(study.forecasts.predictions()(1, 1)));
  CHECK(study.forecasts.forecaster_groups().at("y") == "expert");
}

TEST_CASE("full covariance file") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate\na,1\nb,2\n");
  const auto cov = dir.write("cov.csv", "b,a\n2,0.5\n0.5,1\n");
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\na,x,1\nb,x,1\n");
  const EffectStudy study = load_effect_study({effects, forecasts, cov, std::nullopt});
  // header order b,a is mapped onto the effects order a,b
  CHECK(study.effects.covariance()(0, 0) == 1.0);
  CHECK(study.effects.covariance()(1, 1) == 2.0);
  CHECK(study.effects.covariance()(0, 1) == 0.5);
  CHECK_FALSE(study.effects.is_diagonal());
}

TEST_CASE("forecast for an unknown treatment is an alignment error") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\nb,2,1\n");
  const auto forecasts = dir.write("forecasts.csv",
                                   "treatment_id,forecaster_id,prediction\n"
                                   "a,x,1\nb,x,1\nc,x,1\n");
  const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
  CHECK(std::string(e.what()).find("symmetric difference: {c}") != std::string::npos);
  CHECK(e.row() == 3u);
}

TEST_CASE("treatment without forecasts is an alignment error") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\nb,2,1\n");
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\na,x,1\n");
  const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
  CHECK(std::string(e.what()).find("{b}") != std::string::npos);
  CHECK(e.row() == 2u);
}

TEST_CASE("negative variance is a PSD violation naming the row") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\nb,2,-0.01\n");
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\na,x,1\nb,x,1\n");
  const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
  CHECK(e.row() == 2u);
  CHECK(e.column() == "variance");
  CHECK(std::string(e.what()).find("positive semi-definite") != std::string::npos);
}

TEST_CASE("schema violations carry row and column") {
  TempDir dir;
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\na,x,1\n");
  SUBCASE("non-numeric cell") {
    const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,abc,1\n");
    const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
    CHECK(e.row() == 1u);
    CHECK(e.column() == "estimate");
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  SUBCASE("missing column") {
    const auto effects = dir.write("effects.csv", "treatment_id,variance\na,1\n");
    const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
    CHECK(e.column() == "estimate");
  }
  SUBCASE("ragged row") {
    const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1\n");
    const auto e = expect_validation_error([&] { load_effect_study(effects, forecasts); });
    CHECK(e.row() == 1u);
  }
  SUBCASE("non-finite prediction") {
    const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\n");
    const auto bad = dir.write("bad.csv", "treatment_id,forecaster_id,prediction\na,x,nan\n");
    const auto e = expect_validation_error([&] { load_effect_study(effects, bad); });
    CHECK(e.row() == 1u);
    CHECK(e.column() == "prediction");
  }
  SUBCASE("duplicate forecast") {
    const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\n");
    const auto bad = dir.write("bad.csv", "treatment_id,forecaster_id,prediction\na,x,1\na,x,2\n");
    const auto e = expect_validation_error([&] { load_effect_study(effects, bad); });
    CHECK(e.row() == 2u);
  }
}

TEST_CASE("covariance must be symmetric and PSD") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.2, 0.3, 1.0;
  CHECK_THROWS_AS(EffectEstimates({"a", "b"}, Eigen::VectorXd::Zero(2), asym), ValidationError);
  Eigen::MatrixXd near(2, 2);
  near << 1.0, 0.2, 0.2 + 1e-10, 1.0;
  CHECK_NOTHROW(EffectEstimates({"a", "b"}, Eigen::VectorXd::Zero(2), near));
  // PSD but singular: Cholesky with jitter succeeds
  Eigen::MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_NOTHROW(EffectEstimates({"a", "b"}, Eigen::VectorXd::Zero(2), singular));
  CHECK_THROWS_AS(EffectEstimates({"a"}, Eigen::VectorXd::Zero(2), singular), ValidationError);
}

TEST_CASE("forecast matrix invariants") {
  Eigen::MatrixXd x(2, 2);
  x << 1, 2, 3, 4;
  BoolMatrix mask(2, 2);
  mask << true, false, true, false;
  CHECK_THROWS_AS(ForecastMatrix({"a", "b"}, {"f", "g"}, x, mask), ValidationError);
  mask << true, false, false, true;
  const ForecastMatrix ok({"a", "b"}, {"f", "g"}, x, mask);
  CHECK(std::isnan(ok.predictions()(0, 1)));
  x(0, 0) = INFINITY;
  CHECK_THROWS_AS(ForecastMatrix::dense({"a", "b"}, {"f", "g"}, x), ValidationError);

  TreatmentCategories cats;
  cats.by_treatment["a"] = {"c1", 2};
  cats.kinds["c1"] = CategoryKind::level;
  CHECK_THROWS_AS(ok.with_categories(cats), ValidationError);
  cats.by_treatment["a"].sign = -1;
  CHECK_NOTHROW(ok.with_categories(cats));
  cats.kinds["c1"] = CategoryKind::difference;
  CHECK_THROWS_AS(ok.with_categories(cats), ValidationError);
}

TEST_CASE("categories file") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\nb,2,1\nc,0,1\n");
  const auto forecasts = dir.write("forecasts.csv",
                                   "treatment_id,forecaster_id,prediction\na,x,1\nb,x,1\nc,x,0\n");
  SUBCASE("level and difference categories") {
    const auto cats = dir.write("cats.csv",
                                "treatment_id,category,sign,kind\n"
                                "a,framing,1,difference\nb,framing,-1,difference\nc,delay,-1,level\n");
    const auto study = load_effect_study({effects, forecasts, std::nullopt, cats});
    const auto& c = *study.forecasts.categories();
    CHECK(c.labels() == std::vector<std::string>{"delay", "framing"});
    CHECK(c.kind_of("framing") == CategoryKind::difference);
    CHECK(c.by_treatment.at("c").sign == -1);
  }
  SUBCASE("kind column is optional") {
    const auto cats = dir.write("cats.csv", "treatment_id,category,sign\na,x,1\nb,x,-1\n");
    CHECK(load_categories(cats).kind_of("x") == CategoryKind::level);
  }
  SUBCASE("bad sign") {
    const auto cats = dir.write("cats.csv", "treatment_id,category,sign\na,x,1\nb,x,0\n");
    const auto e = expect_validation_error([&] { load_categories(cats); });
    CHECK(e.row() == 2u);
    CHECK(e.column() == "sign");
  }
  SUBCASE("unknown treatment") {
    const auto cats = dir.write("cats.csv", "treatment_id,category,sign\na,x,1\nzz,x,1\n");
    const auto e = expect_validation_error(
        [&] { load_effect_study({effects, forecasts, std::nullopt, cats}); });
    CHECK(e.row() == 2u);
  }
  SUBCASE("difference category needs exactly one (k, l) pair") {
    const auto cats = dir.write("cats.csv",
                                "treatment_id,category,sign,kind\n"
                                "a,framing,1,difference\nb,framing,1,difference\n");
    CHECK_THROWS_AS(load_effect_study({effects, forecasts, std::nullopt, cats}), ValidationError);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("replication study loader") {
  TempDir dir;
  const auto forecasts = dir.write("rf.csv", "study_id,forecaster_id,probability\nstudy_1,f,0.6\n");
  SUBCASE("single row, default alpha") {
    const auto studies = dir.write("r.csv",
                                   "study_id,original_effect,replication_n,replication_p,replication_direction\n"
                                   "study_1,0.4,100,0.04,1\n");
    const auto data = load_replication_study(studies, forecasts);
    CHECK(data.size() == 1);
    CHECK(data.alpha()[0] == 0.05);
    CHECK(data.replication_n()[0] == 100);
    CHECK(data.forecaster_probs().predictions()(0, 0) == 0.6);
  }
  SUBCASE("p = 0 is rejected") {
    const auto studies = dir.write("r.csv",
                                   "study_id,original_effect,replication_n,replication_p,replication_direction\n"
                                   "study_1,0.4,100,0,1\n");
    const auto e = expect_validation_error([&] { load_replication_study(studies, forecasts); });
    CHECK(e.row() == 1u);
    CHECK(e.column() == "replication_p");
  }
  SUBCASE("forecast above 1 is rejected") {
    const auto studies = dir.write("r.csv",
                                   "study_id,original_effect,replication_n,replication_p,replication_direction,alpha\n"
                                   "study_1,0.4,100,0.2,-1,0.1\n");
    const auto bad = dir.write("bad.csv", "study_id,forecaster_id,probability\nstudy_1,f,1.3\n");
    const auto e = expect_validation_error([&] { load_replication_study(studies, bad); });
    CHECK(e.row() == 1u);
    CHECK(e.column() == "probability");
  }
  SUBCASE("n below 2 and bad direction") {
    const auto s1 = dir.write("r1.csv",
                              "study_id,original_effect,replication_n,replication_p,replication_direction\n"
                              "study_1,0.4,1,0.2,1\n");
    CHECK(expect_validation_error([&] { load_replication_study(s1, forecasts); }).column() == "replication_n");
    const auto s2 = dir.write("r2.csv",
                              "study_id,original_effect,replication_n,replication_p,replication_direction\n"
                              "study_1,0.4,10,0.2,0\n");
    CHECK(expect_validation_error([&] { load_replication_study(s2, forecasts); }).column() ==
          "replication_direction");
  }
}

TEST_CASE("back-out of the replication effect") {
  const double z975 = feval::testing::bisection_normal_quantile(0.975);
  CHECK(std::sqrt(100.0) * backout_replication_effect(one_study(0.05, 1, 100))[0] ==
        doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(std::sqrt(100.0) * backout_replication_effect(one_study(0.05, 1, 100))[0] ==
        doctest::Approx(z975).epsilon(1e-10));
  CHECK(std::sqrt(100.0) * backout_replication_effect(one_study(0.05, -1, 100))[0] ==
        doctest::Approx(-z975).epsilon(1e-10));
  // two-sided p for z = 1, from the quadrature CDF: 2 (1 - Phi(1)) = 0.3173 to 4 d.p.
  const double p_z1 = 2.0 * (1.0 - feval::testing::quadrature_normal_cdf(1.0));
  CHECK(p_z1 == doctest::Approx(0.3173).epsilon(1e-4));
  const double y = backout_replication_effect(one_study(0.3173, 1, 400))[0];
  CHECK(20.0 * y == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(y == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(backout_replication_effect(one_study(1.0, 1, 50))[0] == 0.0);
}

TEST_CASE("back-out then recomputed p-value recovers p") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double p = std::max(1e-6, rng.uniform());
    const int dir = rng.uniform() < 0.5 ? -1 : 1;
    const int n = 2 + static_cast<int>(rng.index(5000));
    const double y = backout_replication_effect(one_study(p, dir, n))[0];
    CHECK((y == 0.0 || (y > 0.0) == (dir > 0)));
    const double recovered = 2.0 * (1.0 - feval::testing::quadrature_normal_cdf(std::sqrt(n) * std::abs(y)));
    CHECK(std::abs(recovered - p) < 1e-10);
  }
}

TEST_CASE("replication effects carry variance 1/n") {
  const auto est = replication_effect_estimates(one_study(0.2, 1, 80));
  CHECK(est.covariance()(0, 0) == doctest::Approx(1.0 / 80.0));
}

// ---------------------------------------------------------------------------

TEST_CASE("CSV quoting and number formatting") {
  std::istringstream in("a,b\n\"x,y\",\"say \\\"hi\\\"\"\r\n\n");
  const auto table = csv::parse(in, "mem");
  CHECK(table.row_count() == 1);
  CHECK(table.text(0, 0) == "x,y");
  CHECK(table.text(0, 1) == "say \"hi\"");
  std::ostringstream out;
  csv::write_row(out, {"x,y", "plain"});
  CHECK(out.str() == "\"x,y\",plain\n");
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.0}) {
    CHECK(std::stod(csv::format_number(v)) == v);
  }
  std::istringstream dup("a,a\n1,2\n");
  CHECK_THROWS_AS(csv::parse(dup, "mem"), ValidationError);
}

TEST_CASE("round trip reproduces every number bit for bit") {
  TempDir dir;
  Rng rng(42);
  const Eigen::Index k = 7;
  const Eigen::Index f = 5;
  std::vector<std::string> tids, fids;
  for (Eigen::Index i = 0; i < k; ++i) tids.push_back("treat " + std::to_string(i));
  for (Eigen::Index j = 0; j < f; ++j) fids.push_back("f" + std::to_string(j));
  Eigen::VectorXd y(k), var(k);
  Eigen::MatrixXd x(k, f);
  BoolMatrix mask(k, f);
  for (Eigen::Index i = 0; i < k; ++i) {
    y[i] = rng.normal() / 3.0;
    var[i] = rng.uniform() / 7.0 + 1e-3;
    for (Eigen::Index j = 0; j < f; ++j) {
      x(i, j) = rng.normal() * 1e3 / 7.0;
      mask(i, j) = (i + j) % 3 != 0;
    }
  }
  std::map<std::string, std::string> groups{{"f0", "a"}, {"f1", "b"}, {"f2", "a"}, {"f3", "b"}, {"f4", "a"}};
  const ForecastMatrix fm(tids, fids, x, mask, groups);
  const auto effects = EffectEstimates::from_variances(tids, y, var);
  write_effects(effects, dir / "effects.csv");
  write_forecasts(fm, dir / "forecasts.csv");
  const auto back = load_effect_study(dir / "effects.csv", dir / "forecasts.csv");
  CHECK(back.effects.estimates() == effects.estimates());
  CHECK(back.effects.covariance() == effects.covariance());
  CHECK(back.forecasts.forecaster_ids() == fm.forecaster_ids());
  CHECK(back.forecasts.observed() == fm.observed());
  CHECK(back.forecasts.forecaster_groups() == groups);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) {
      if (mask(i, j)) CHECK(back.forecasts.predictions()(i, j) == x(i, j));
    }
  }
  // second write of the reloaded data is byte-identical
  write_effects(back.effects, dir / "effects2.csv");
  write_forecasts(back.forecasts, dir / "forecasts2.csv");
  CHECK(feval::testing::slurp(dir / "effects.csv") == feval::testing::slurp(dir / "effects2.csv"));
  CHECK(feval::testing::slurp(dir / "forecasts.csv") == feval::testing::slurp(dir / "forecasts2.csv"));

  // correlated errors go through a covariance file
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(k, k);
  const EffectEstimates corr(tids, y, a * a.transpose() / 3.0);
  write_effects(corr, dir / "ce.csv", dir / "cov.csv");
  const auto back2 = load_effect_study({dir / "ce.csv", dir / "forecasts.csv", dir / "cov.csv", std::nullopt});
  CHECK(back2.effects.covariance() == corr.covariance());
  CHECK_THROWS_AS(write_effects(corr, dir / "nope.csv"), Error);
}

TEST_CASE("replication round trip") {
  TempDir dir;
  Eigen::MatrixXd probs(2, 2);
  probs << 0.1, 0.25, 1.0 / 3.0, 0.0;
  BoolMatrix mask(2, 2);
  mask << true, true, true, false;
  const ReplicationDataset data({"s1", "s2"}, Eigen::Vector2d(0.3, -0.1), Eigen::Vector2i(50, 120),
                                Eigen::Vector2d(0.01, 0.7), Eigen::Vector2i(1, -1), Eigen::Vector2d(0.05, 0.1),
                                ForecastMatrix({"s1", "s2"}, {"a", "b"}, probs, mask));
  write_replication_study(data, dir / "r.csv", dir / "rf.csv");
  const auto back = load_replication_study(dir / "r.csv", dir / "rf.csv");
  CHECK(back.original_effect() == data.original_effect());
  CHECK(back.replication_n() == data.replication_n());
  CHECK(back.replication_p() == data.replication_p());
  CHECK(back.replication_direction() == data.replication_direction());
  CHECK(back.alpha() == data.alpha());
  CHECK(back.forecaster_probs().observed() == mask);
  CHECK(back.forecaster_probs().predictions()(1, 0) == 1.0 / 3.0);
}
