#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feval/losses.hpp"
#include "feval/report.hpp"

namespace feval::cli {

enum class EbChoice { automatic, parametric, nonparametric };

EbChoice parse_eb_choice(std::string_view name);
std::string_view to_string(EbChoice choice);

struct SynthOptions {
  std::string kind = "effect";  // effect | replication
  Eigen::Index treatments = 50;
  Eigen::Index forecasters = 30;
  double effect_mean = 0.0;
  double effect_sd = 1.0;  // 0: point mass at effect_mean
  double noise_sd = 0.1;
  double bias = 0.0;
  double forecaster_noise_sd = 1.0;
  double missing_rate = 0.0;
  std::string groups;  // "label:bias,label:bias"
  // replication kind
  double slope = 0.5;
  double intercept = 0.0;
  double residual_sd = 0.0;
  int replication_n = 100;
  double forecast_mean = 0.5;
  double forecast_skill = 0.0;
};

struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> effects;
  std::optional<std::filesystem::path> forecasts;
  std::optional<std::filesystem::path> covariance;
  std::optional<std::filesystem::path> categories;
  std::optional<std::filesystem::path> replication;
  std::optional<std::filesystem::path> effort_conditions;
  std::optional<std::filesystem::path> input;  // report command
  std::string anchors;                          // "payment:points" x 3, comma separated
  EbChoice eb = EbChoice::automatic;
  std::optional<LossKind> loss;  // evaluate: squared_error, replication: brier
  std::vector<std::string> models;
  Eigen::Index samples = 10000;
  int gibbs_draws = 5000;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::string units;
  std::string study;
  unsigned threads = 0;
  SynthOptions synth;
};

// Everything that determines the output: options plus a hash of each input
// file's bytes (paths themselves are excluded).
nlohmann::ordered_json canonical_config(const RunConfig& config);

struct RunResult {
  EvaluationReport report;
  std::vector<std::filesystem::path> written;
};

// Both write <out>/report.json, <out>/plots/risk.csv and <out>/plots/bias.csv.
// On failure nothing written by the run is left behind.
RunResult run_evaluate(const RunConfig& config);
RunResult run_replication(const RunConfig& config);

// Writes a synthetic study in the loader schemas plus truth.csv.
std::vector<std::filesystem::path> run_synth(const RunConfig& config);

std::string render_report(const EvaluationReport& report);

// Command-line entry point; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace feval::cli
