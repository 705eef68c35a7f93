#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feval/inference.hpp"

namespace feval {

struct ReportMetadata {
  std::string command;
  std::string study;
  std::string units;
  std::string eb_kind;
  std::uint64_t seed = 0;
  Eigen::Index samples = 0;
  std::string config_hash;
  std::string library_version;
  std::optional<double> variance_floor_hit_rate;
  std::vector<std::string> notes;
};

// One row per estimand, mirroring a results table:
// {study, estimand, loss, mean, ci_lower, ci_upper, p_value, n_samples, seed}
// plus the tail probability Pr{estimand < 0} and the Monte Carlo error.
struct EvaluationReport {
  ReportMetadata metadata;
  std::string study;
  std::vector<EstimateSummary> rows;

  nlohmann::ordered_json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& doc);
};

std::string library_version();

// 16 hex digits of FNV-1a over the compact dump of `canonical`.
std::string config_hash(const nlohmann::ordered_json& canonical);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace feval
