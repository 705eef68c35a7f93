#include "feval/report.hpp"

#include <cstdio>
#include <fstream>

#include "feval/errors.hpp"

namespace feval {

std::string library_version() { return FEVAL_VERSION; }

nlohmann::ordered_json EvaluationReport::to_json() const {
  nlohmann::ordered_json meta;
  meta["command"] = metadata.command;
  meta["study"] = metadata.study;
  meta["units"] = metadata.units;
  meta["eb_kind"] = metadata.eb_kind;
  meta["seed"] = metadata.seed;
  meta["n_samples"] = metadata.samples;
  meta["config_hash"] = metadata.config_hash;
  meta["library_version"] = metadata.library_version;
  if (metadata.variance_floor_hit_rate) {
    meta["variance_floor_hit_rate"] = *metadata.variance_floor_hit_rate;
  }
  meta["notes"] = metadata.notes;

  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    nlohmann::ordered_json r;
    r["study"] = study;
    r["estimand"] = row.estimand;
    r["loss"] = std::string(to_string(row.loss));
    r["mean"] = row.mean;
    r["ci_lower"] = row.ci_lower;
    r["ci_upper"] = row.ci_upper;
    r["p_value"] = row.p_value;
    r["pr_negative"] = row.pr_negative;
    r["mc_standard_error"] = row.mc_standard_error;
    r["n_samples"] = row.n_samples;
    r["seed"] = row.seed;
    results.push_back(std::move(r));
  }
  nlohmann::ordered_json doc;
  doc["metadata"] = std::move(meta);
  doc["results"] = std::move(results);
  return doc;
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& doc) {
  EvaluationReport report;
  try {
    const auto& meta = doc.at("metadata");
    report.metadata.command = meta.at("command").get<std::string>();
    report.metadata.study = meta.at("study").get<std::string>();
    report.metadata.units = meta.at("units").get<std::string>();
    report.metadata.eb_kind = meta.at("eb_kind").get<std::string>();
    report.metadata.seed = meta.at("seed").get<std::uint64_t>();
    report.metadata.samples = meta.at("n_samples").get<Eigen::Index>();
    report.metadata.config_hash = meta.at("config_hash").get<std::string>();
    report.metadata.library_version = meta.at("library_version").get<std::string>();
    if (meta.contains("variance_floor_hit_rate")) {
      report.metadata.variance_floor_hit_rate = meta["variance_floor_hit_rate"].get<double>();
    }
    report.metadata.notes = meta.value("notes", std::vector<std::string>{});
    report.study = report.metadata.study;
    for (const auto& r : doc.at("results")) {
      EstimateSummary s;
      s.estimand = r.at("estimand").get<std::string>();
      s.loss = parse_loss_kind(r.at("loss").get<std::string>());
      s.mean = r.at("mean").get<double>();
      s.ci_lower = r.at("ci_lower").get<double>();
      s.ci_upper = r.at("ci_upper").get<double>();
      s.p_value = r.at("p_value").get<double>();
      s.pr_negative = r.value("pr_negative", 0.0);
      s.mc_standard_error = r.value("mc_standard_error", 0.0);
      s.n_samples = r.at("n_samples").get<Eigen::Index>();
      s.seed = r.at("seed").get<std::uint64_t>();
      report.rows.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string config_hash(const nlohmann::ordered_json& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move report into place at " + path.string());
  }
}

}  // namespace feval
