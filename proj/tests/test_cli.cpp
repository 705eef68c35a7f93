#include <doctest.h>

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "feval/csv.hpp"
#include "support/temp_dir.hpp"

using feval::testing::slurp;
using feval::testing::TempDir;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "feval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = feval::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string str(const std::filesystem::path& p) { return p.string(); }

}  // namespace

TEST_CASE("synth then evaluate produces a complete report") {
  TempDir dir;
  const auto data = dir / "data";
  auto s = run_cli({"synth", "--treatments", "12", "--forecasters", "6", "--effect-mean", "0.17", "--effect-sd",
                    "0.1", "--noise-sd", "0.05", "--bias", "2.3", "--seed", "3", "--out", str(data)});
  REQUIRE(s.status == 0);
  CHECK(std::filesystem::exists(data / "truth.csv"));

  const auto out = dir / "run";
  auto r = run_cli({"evaluate", "--effects", str(data / "effects.csv"), "--forecasts", str(data / "forecasts.csv"),
                    "--models", "null,oracle", "--samples", "2000", "--seed", "5", "--out", str(out), "--units",
                    "visits"});
  INFO(r.err);
  REQUIRE(r.status == 0);
  const auto doc = nlohmann::json::parse(slurp(out / "report.json"));
  std::set<std::string> estimands;
  for (const auto& row : doc["results"]) {
    estimands.insert(row["estimand"].get<std::string>());
    for (const char* key : {"study", "estimand", "loss", "mean", "ci_lower", "ci_upper", "p_value", "n_samples",
                            "seed"}) {
      CHECK(row.contains(key));
    }
    CHECK(row["ci_lower"].get<double>() <= row["mean"].get<double>() + 1e-12);
    CHECK(row["mean"].get<double>() <= row["ci_upper"].get<double>() + 1e-12);
  }
  for (const char* e : {"risk:forecasters", "risk:null", "risk:oracle", "bias", "comparative_risk:null"}) {
    CHECK(estimands.count(e) == 1);
  }
  CHECK(doc["metadata"]["eb_kind"] == "parametric");
  CHECK(doc["metadata"]["config_hash"].get<std::string>().size() == 16);
  CHECK(doc["metadata"]["library_version"] == feval::library_version());
  CHECK(doc["metadata"]["seed"] == 5);

  const auto risk = feval::csv::read(out / "plots" / "risk.csv");
  CHECK(risk.header() == std::vector<std::string>{"predictor", "mean", "ci_lower", "ci_upper"});
  CHECK(risk.row_count() == 3);
  const auto bias = feval::csv::read(out / "plots" / "bias.csv");
  CHECK(bias.header() == std::vector<std::string>{"label", "mean", "ci_lower", "ci_upper", "significant"});
  CHECK(bias.row_count() == 13);

  auto shown = run_cli({"report", "--input", str(out / "report.json")});
  CHECK(shown.status == 0);
  CHECK(shown.out.find("risk:forecasters") != std::string::npos);
}

TEST_CASE("same configuration and seed give byte-identical outputs") {
  TempDir dir;
  REQUIRE(run_cli({"synth", "--treatments", "30", "--forecasters", "5", "--missing-rate", "0.2", "--groups",
                   "a:1,b:0.5", "--seed", "9", "--out", str(dir / "d")})
              .status == 0);
  const std::vector<std::string> args{"evaluate", "--effects", str(dir / "d" / "effects.csv"), "--forecasts",
                                      str(dir / "d" / "forecasts.csv"), "--samples", "1000", "--seed", "1"};
  auto a = args;
  a.insert(a.end(), {"--out", str(dir / "a")});
  auto b = args;
  b.insert(b.end(), {"--out", str(dir / "b"), "--threads", "3"});
  REQUIRE(run_cli(a).status == 0);
  REQUIRE(run_cli(b).status == 0);
  for (const char* f : {"report.json", "plots/risk.csv", "plots/bias.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto doc = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(doc["metadata"]["eb_kind"] == "nonparametric");
}

TEST_CASE("brier loss on effect data fails before writing anything") {
  TempDir dir;
  REQUIRE(run_cli({"synth", "--treatments", "5", "--forecasters", "3", "--effect-mean", "3", "--out",
                   str(dir / "d")})
              .status == 0);
  const auto r = run_cli({"evaluate", "--effects", str(dir / "d" / "effects.csv"), "--forecasts",
                          str(dir / "d" / "forecasts.csv"), "--loss", "brier", "--out", str(dir / "o")});
  CHECK(r.status != 0);
  CHECK(r.err.find("brier") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "o" / "report.json"));
}

TEST_CASE("invalid input exits nonzero with the module message") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\na,1,1\nb,2,-0.01\n");
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\na,x,1\nb,x,1\n");
  const auto r = run_cli({"evaluate", "--effects", str(effects), "--forecasts", str(forecasts), "--out",
                          str(dir / "o")});
  CHECK(r.status == 1);
  CHECK(r.err.find("row 2") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "o" / "report.json"));

  CHECK(run_cli({"evaluate", "--effects", str(effects)}).status != 0);
  CHECK(run_cli({"evaluate", "--effects", str(effects), "--forecasts", str(forecasts), "--eb", "magic", "--out",
                 str(dir / "o")})
            .status == 1);
  CHECK(run_cli({"frobnicate"}).status != 0);
}

TEST_CASE("replication with all forecasts at one half") {
  TempDir dir;
  REQUIRE(run_cli({"synth", "--kind", "replication", "--treatments", "20", "--forecasters", "4", "--forecast-mean",
                   "0.5", "--forecaster-noise-sd", "0", "--seed", "2", "--out", str(dir / "d")})
              .status == 0);
  const auto r = run_cli({"replication", "--replication", str(dir / "d" / "studies.csv"), "--forecasts",
                          str(dir / "d" / "forecasts.csv"), "--samples", "1000", "--gibbs-draws", "500", "--out",
                          str(dir / "o")});
  INFO(r.err);
  REQUIRE(r.status == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "o" / "report.json"));
  std::map<std::string, nlohmann::json> rows;
  for (const auto& row : doc["results"]) rows[row["estimand"].get<std::string>()] = row;
  CHECK(rows["risk:forecasters"]["mean"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rows["risk:random"]["mean"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(rows["comparative_risk:random"]["mean"].get<double>()) < 1e-15);
  CHECK(rows["comparative_risk:random"]["ci_lower"].get<double>() == 0.0);
  CHECK(rows["risk:forecasters"]["loss"] == "brier");
  CHECK(doc["metadata"].contains("variance_floor_hit_rate"));
}

TEST_CASE("interpolation models need their inputs") {
  TempDir dir;
  const auto effects = dir.write("effects.csv", "treatment_id,estimate,variance\np0,1500,100\np1,2000,100\n"
                                                "p10,2200,100\nr1,1900,100\n");
  const auto forecasts = dir.write("forecasts.csv", "treatment_id,forecaster_id,prediction\np0,x,1500\n"
                                                    "p1,x,1900\np10,x,2100\nr1,x,1800\n");
  const auto conds = dir.write("conds.csv", "condition_id,incentive_kind,own_cents_per_100,charity_cents_per_100\n"
                                            "p0,other,0,0\np1,piece_rate_self,1,0\np10,piece_rate_self,10,0\n"
                                            "r1,piece_rate_charity,0,1\n");
  const std::vector<std::string> base{"evaluate", "--effects", str(effects), "--forecasts", str(forecasts),
                                      "--models", "interpolation_selfish,interpolation_altruistic", "--samples",
                                      "1000"};
  auto missing = base;
  missing.insert(missing.end(), {"--out", str(dir / "o1")});
  CHECK(run_cli(missing).status == 1);
  auto ok = base;
  ok.insert(ok.end(), {"--effort-conditions", str(conds), "--anchors", "0:1500,1:2000,10:2200", "--out",
                       str(dir / "o2")});
  const auto r = run_cli(ok);
  INFO(r.err);
  REQUIRE(r.status == 0);
  const auto risk = feval::csv::read(dir / "o2" / "plots" / "risk.csv");
  CHECK(risk.row_count() == 3);
}
