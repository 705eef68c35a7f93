#include "cli.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "feval/baselines.hpp"
#include "feval/csv.hpp"
#include "feval/data_model.hpp"
#include "feval/empirical_bayes.hpp"
#include "feval/errors.hpp"
#include "feval/inference.hpp"
#include "feval/random.hpp"
#include "feval/synthetic.hpp"

namespace feval::cli {

namespace fs = std::filesystem;

EbChoice parse_eb_choice(std::string_view name) {
  if (name == "auto") return EbChoice::automatic;
  if (name == "parametric") return EbChoice::parametric;
  if (name == "nonparametric") return EbChoice::nonparametric;
  throw ValidationError("unknown --eb '" + std::string(name) +
                        "' (expected auto, parametric or nonparametric)");
}

std::string_view to_string(EbChoice choice) {
  switch (choice) {
    case EbChoice::automatic: return "auto";
    case EbChoice::parametric: return "parametric";
    case EbChoice::nonparametric: return "nonparametric";
  }
  return "auto";
}

namespace {

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return config_hash(nlohmann::ordered_json(bytes));
}

std::string study_label(const RunConfig& c, const std::optional<fs::path>& main_input) {
  if (!c.study.empty()) return c.study;
  return main_input ? main_input->stem().string() : std::string("study");
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t purpose) {
  return mix_seed(seed ^ mix_seed(purpose));
}

// ---------------------------------------------------------------------------
// Posterior

struct Posterior {
  PosteriorSampler sampler;
  std::string kind;
  std::vector<std::string> notes;
};

Posterior fit_posterior(const EffectEstimates& effects, EbChoice choice, std::uint64_t seed) {
  const bool nonparametric =
      choice == EbChoice::nonparametric ||
      (choice == EbChoice::automatic && effects.is_diagonal() && effects.size() >= 30);
  if (nonparametric) {
    if (!effects.is_diagonal()) {
      throw DomainError("nonparametric empirical Bayes needs independent errors (diagonal covariance)");
    }
    const NonparametricEBFit fit = fit_nonparametric_eb(effects);
    Posterior p{PosteriorSampler::nonparametric(fit, seed), "nonparametric", fit.warnings};
    std::ostringstream note;
    note << "NPMLE on " << fit.grid.size() << " grid points, log-likelihood "
         << csv::format_number(fit.log_likelihood) << ", optimality gap "
         << csv::format_number(fit.optimality_gap);
    p.notes.push_back(note.str());
    return p;
  }
  const ParametricEBFit fit = fit_parametric_eb(effects);
  Posterior p{PosteriorSampler::parametric(fit, seed), "parametric", {}};
  p.notes.push_back("normal prior mean " + csv::format_number(fit.prior_mean) + ", variance " +
                    csv::format_number(fit.prior_variance));
  return p;
}

// ---------------------------------------------------------------------------
// Models

std::array<EffortAnchor, 3> parse_anchors(const std::string& text) {
  std::vector<EffortAnchor> anchors;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("--anchors expects payment:points pairs, got '" + item + "'");
    }
    try {
      anchors.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ValidationError("--anchors: cannot parse '" + item + "'");
    }
  }
  if (anchors.size() != 3) {
    throw ValidationError("--anchors needs exactly three payment:points pairs, got " +
                          std::to_string(anchors.size()));
  }
  return {anchors[0], anchors[1], anchors[2]};
}

Eigen::VectorXd interpolation_model(const RunConfig& c, const std::vector<std::string>& treatment_ids,
                                    InterpolationMode mode) {
  if (!c.effort_conditions || c.anchors.empty()) {
    throw ValidationError("interpolation models need --effort-conditions and --anchors");
  }
  const auto conditions = load_effort_conditions(*c.effort_conditions);
  std::vector<EffortConditionSpec> ordered;
  for (const auto& id : treatment_ids) {
    const auto it = std::find_if(conditions.begin(), conditions.end(),
                                 [&](const EffortConditionSpec& s) { return s.condition_id == id; });
    if (it == conditions.end()) {
      throw ValidationError(c.effort_conditions->string() + ": no condition row for treatment '" + id + "'");
    }
    ordered.push_back(*it);
  }
  return linear_interpolation_predictions(ordered, parse_anchors(c.anchors), mode);
}

// ---------------------------------------------------------------------------
// Output

struct Family {
  std::string name;
  SimultaneousInference result;
};

std::string risk_csv(const std::vector<EstimateSummary>& rows) {
  std::ostringstream out;
  csv::write_row(out, {"predictor", "mean", "ci_lower", "ci_upper"});
  for (const auto& r : rows) {
    if (r.estimand.rfind("risk:", 0) != 0) continue;
    csv::write_row(out, {r.estimand.substr(5), csv::format_number(r.mean), csv::format_number(r.ci_lower),
                         csv::format_number(r.ci_upper)});
  }
  return out.str();
}

std::string bias_csv(const std::vector<EstimateSummary>& rows, const std::vector<Family>& families) {
  std::ostringstream out;
  csv::write_row(out, {"label", "mean", "ci_lower", "ci_upper", "significant"});
  for (const auto& r : rows) {
    if (r.estimand != "bias") continue;
    const bool sig = r.ci_lower > 0.0 || r.ci_upper < 0.0;
    csv::write_row(out, {r.estimand, csv::format_number(r.mean), csv::format_number(r.ci_lower),
                         csv::format_number(r.ci_upper), sig ? "true" : "false"});
  }
  for (const auto& fam : families) {
    for (std::size_t j = 0; j < fam.result.labels.size(); ++j) {
      const auto& b = fam.result.bands[j];
      csv::write_row(out, {fam.result.labels[j], csv::format_number(b.mean), csv::format_number(b.lower),
                           csv::format_number(b.upper), b.significant ? "true" : "false"});
    }
  }
  return out.str();
}

std::vector<fs::path> write_outputs(const fs::path& out_dir, const EvaluationReport& report,
                                    const std::string& risk, const std::string& bias) {
  if (out_dir.empty()) throw ValidationError("--out is required");
  std::vector<fs::path> written;
  try {
    fs::create_directories(out_dir / "plots");
    const std::vector<std::pair<fs::path, std::string>> files{
        {out_dir / "plots" / "risk.csv", risk},
        {out_dir / "plots" / "bias.csv", bias},
        {out_dir / "report.json", report.to_json().dump(2) + "\n"},
    };
    for (const auto& [path, content] : files) {
      write_file_atomically(path, content);
      written.push_back(path);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

InferenceOptions inference_options(const RunConfig& c) {
  InferenceOptions o;
  o.samples = c.samples;
  o.seed = c.seed;
  o.threads = c.threads;
  return o;
}

ReportMetadata base_metadata(const RunConfig& c, const std::string& study, const std::string& eb_kind) {
  ReportMetadata m;
  m.command = c.command;
  m.study = study;
  m.units = c.units;
  m.eb_kind = eb_kind;
  m.seed = c.seed;
  m.samples = c.samples;
  m.config_hash = config_hash(canonical_config(c));
  m.library_version = library_version();
  return m;
}

void append_family(std::vector<EstimateSummary>& rows, std::vector<Family>& families, std::string name,
                   SimultaneousInference result) {
  rows.insert(rows.end(), result.estimates.begin(), result.estimates.end());
  families.push_back({std::move(name), std::move(result)});
}

std::set<std::string> group_labels(const ForecastMatrix& fm) {
  std::set<std::string> labels;
  for (const auto& [f, g] : fm.forecaster_groups()) labels.insert(g);
  return labels;
}

void require_probability_data(const EffectStudy& study) {
  const auto& x = study.forecasts.predictions();
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      if (study.forecasts.is_observed(k, f) && !(x(k, f) >= 0.0 && x(k, f) <= 1.0)) {
        throw DomainError("brier loss needs probability forecasts in [0, 1]; forecaster '" +
                          study.forecasts.forecaster_ids()[static_cast<std::size_t>(f)] + "' predicts " +
                          csv::format_number(x(k, f)) + " for '" + study.forecasts.treatment_ids()[static_cast<std::size_t>(k)] +
                          "'");
      }
    }
  }
  const auto& y = study.effects.estimates();
  if ((y.array() < 0.0).any() || (y.array() > 1.0).any()) {
    throw DomainError("brier loss needs effect estimates that are probabilities in [0, 1]");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::ordered_json canonical_config(const RunConfig& c) {
  nlohmann::ordered_json doc;
  doc["command"] = c.command;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  const auto add = [&](const char* name, const std::optional<fs::path>& p) {
    if (p) inputs[name] = file_digest(*p);
  };
  add("effects", c.effects);
  add("forecasts", c.forecasts);
  add("covariance", c.covariance);
  add("categories", c.categories);
  add("replication", c.replication);
  add("effort_conditions", c.effort_conditions);
  doc["inputs"] = std::move(inputs);
  doc["anchors"] = c.anchors;
  doc["eb"] = std::string(to_string(c.eb));
  doc["loss"] = c.loss ? std::string(to_string(*c.loss)) : std::string("default");
  doc["models"] = c.models;
  doc["samples"] = c.samples;
  doc["gibbs_draws"] = c.gibbs_draws;
  doc["seed"] = c.seed;
  doc["units"] = c.units;
  doc["study"] = c.study;
  return doc;
}

RunResult run_evaluate(const RunConfig& c) {
  if (!c.effects || !c.forecasts) throw ValidationError("evaluate needs --effects and --forecasts");
  const LossKind loss_kind = c.loss.value_or(LossKind::squared_error);
  const EffectStudy study = load_effect_study({*c.effects, *c.forecasts, c.covariance, c.categories});
  if (loss_kind == LossKind::brier) require_probability_data(study);

  std::vector<std::string> model_names = c.models;
  if (model_names.empty()) model_names = {"null", "oracle"};
  for (const auto& name : model_names) {
    if (name != "null" && name != "oracle" && name != "interpolation_selfish" &&
        name != "interpolation_altruistic") {
      throw ValidationError("unknown model '" + name +
                            "' for evaluate (expected null, oracle, interpolation_selfish, "
                            "interpolation_altruistic)");
    }
  }

  const Posterior posterior = fit_posterior(study.effects, c.eb, derived_seed(c.seed, 1));
  const Eigen::Index k = study.effects.size();
  const auto& ids = study.effects.treatment_ids();

  ModelSet models;
  std::vector<EstimandSpec> specs{EstimandSpec::forecaster_risk(loss_kind)};
  for (const auto& name : model_names) {
    if (name == "null") {
      models[name] = {name, null_effect_predictions(k), {}};
    } else if (name == "oracle") {
      models[name] = {name, oracle_predictions(posterior.sampler, loss_kind), {}};
    } else {
      const auto mode = name == "interpolation_selfish" ? InterpolationMode::selfish : InterpolationMode::altruistic;
      models[name] = {name, interpolation_model(c, ids, mode), {}};
    }
    specs.push_back(name == "oracle" ? EstimandSpec::oracle_risk(loss_kind)
                                     : EstimandSpec::model_risk(name, loss_kind));
  }
  for (const auto& name : model_names) specs.push_back(EstimandSpec::comparative(name, loss_kind));
  specs.push_back(EstimandSpec::bias());

  const InferenceOptions options = inference_options(c);
  std::vector<EstimateSummary> rows = estimate_all(study.forecasts, posterior.sampler, specs, models, options);
  std::vector<Family> families;
  if (k >= 2) {
    append_family(rows, families, "treatments",
                  per_treatment_bias_simultaneous(study.forecasts, posterior.sampler, options));
  }
  if (study.forecasts.categories()) {
    append_family(rows, families, "categories", category_bias(study.forecasts, posterior.sampler, options));
  }
  if (group_labels(study.forecasts).size() >= 2) {
    append_family(rows, families, "groups", subgroup_bias(study.forecasts, posterior.sampler, options));
  }

  RunResult result;
  result.report.study = study_label(c, c.effects);
  result.report.metadata = base_metadata(c, result.report.study, posterior.kind);
  result.report.metadata.notes = posterior.notes;
  result.report.rows = std::move(rows);
  result.written = write_outputs(c.out, result.report, risk_csv(result.report.rows),
                                 bias_csv(result.report.rows, families));
  return result;
}

RunResult run_replication(const RunConfig& c) {
  if (!c.replication || !c.forecasts) throw ValidationError("replication needs --replication and --forecasts");
  const LossKind loss_kind = c.loss.value_or(LossKind::brier);
  const ReplicationDataset data = load_replication_study(*c.replication, *c.forecasts);

  std::vector<std::string> model_names = c.models;
  if (model_names.empty()) model_names = {"null", "random", "regression", "oracle"};
  for (const auto& name : model_names) {
    if (name != "null" && name != "random" && name != "regression" && name != "oracle") {
      throw ValidationError("unknown model '" + name +
                            "' for replication (expected null, random, regression, oracle)");
    }
  }

  const EffectEstimates effects = replication_effect_estimates(data);
  const Posterior posterior = fit_posterior(effects, c.eb, derived_seed(c.seed, 1));
  const PosteriorSampler sampler = posterior.sampler.with_replication_link(data.replication_n(), data.alpha());
  const Eigen::Index k = data.size();

  ModelSet models;
  std::vector<EstimandSpec> specs{EstimandSpec::forecaster_risk(loss_kind)};
  std::optional<double> floor_rate;
  for (const auto& name : model_names) {
    if (name == "null") {
      Eigen::VectorXd p(k);
      for (Eigen::Index i = 0; i < k; ++i) p[i] = null_replication_predictions(1, data.alpha()[i])[0];
      models[name] = {name, p, {}};
    } else if (name == "random") {
      models[name] = {name, random_chance_predictions(k), {}};
    } else if (name == "regression") {
      GibbsRegressionResult gibbs = gibbs_regression_replication(data, c.gibbs_draws, derived_seed(c.seed, 2));
      floor_rate = gibbs.variance_floor_hit_rate;
      models[name] = {name, gibbs.mean_probability, std::move(gibbs.prediction_draws)};
    } else {
      models[name] = {name, oracle_predictions(sampler, loss_kind), {}};
    }
    specs.push_back(name == "oracle" ? EstimandSpec::oracle_risk(loss_kind)
                                     : EstimandSpec::model_risk(name, loss_kind));
  }
  for (const auto& name : model_names) specs.push_back(EstimandSpec::comparative(name, loss_kind));
  specs.push_back(EstimandSpec::bias());

  const InferenceOptions options = inference_options(c);
  std::vector<EstimateSummary> rows = estimate_all(data.forecaster_probs(), sampler, specs, models, options);
  std::vector<Family> families;
  if (group_labels(data.forecaster_probs()).size() >= 2) {
    append_family(rows, families, "groups", subgroup_bias(data.forecaster_probs(), sampler, options));
  }

  RunResult result;
  result.report.study = study_label(c, c.replication);
  result.report.metadata = base_metadata(c, result.report.study, posterior.kind);
  result.report.metadata.notes = posterior.notes;
  result.report.metadata.notes.push_back(
      "replication probabilities use the link Phi(sqrt(n) mu* - c_alpha) on the posterior of mu*");
  if (floor_rate) {
    result.report.metadata.variance_floor_hit_rate = floor_rate;
    result.report.metadata.notes.push_back(
        "regression model: beta drawn from N(beta_hat, s^2 (Z'Z)^-1); variance draws floored at " +
        csv::format_number(kGibbsVarianceFloor));
  }
  result.report.rows = std::move(rows);
  result.written = write_outputs(c.out, result.report, risk_csv(result.report.rows),
                                 bias_csv(result.report.rows, families));
  return result;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<synthetic::GroupSpec> parse_groups(const std::string& text) {
  std::vector<synthetic::GroupSpec> groups;
  if (text.empty()) return groups;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0) {
      throw ValidationError("--groups expects label:bias pairs, got '" + item + "'");
    }
    try {
      groups.push_back({item.substr(0, colon), std::stod(item.substr(colon + 1))});
    } catch (const std::exception&) {
      throw ValidationError("--groups: cannot parse '" + item + "'");
    }
  }
  return groups;
}

}  // namespace

std::vector<fs::path> run_synth(const RunConfig& c) {
  if (c.out.empty()) throw ValidationError("--out is required");
  const SynthOptions& o = c.synth;
  std::vector<fs::path> written;
  const auto truth_path = c.out / "truth.csv";
  try {
    fs::create_directories(c.out);
    if (o.kind == "effect") {
      synthetic::SyntheticStudySpec spec;
      spec.treatments = o.treatments;
      spec.forecasters = o.forecasters;
      if (o.effect_sd > 0.0) {
        spec.prior = synthetic::NormalPrior{o.effect_mean, o.effect_sd * o.effect_sd};
      } else {
        spec.prior = synthetic::PointMassPrior{o.effect_mean};
      }
      spec.noise_sd = Eigen::VectorXd::Constant(1, o.noise_sd);
      spec.forecaster_bias = o.bias;
      spec.forecaster_noise_sd = o.forecaster_noise_sd;
      spec.missing_rate = o.missing_rate;
      spec.groups = parse_groups(o.groups);
      spec.seed = c.seed;
      const auto s = synthetic::generate(spec);
      write_effects(s.effects, c.out / "effects.csv");
      written.push_back(c.out / "effects.csv");
      write_forecasts(s.forecasts, c.out / "forecasts.csv");
      written.push_back(c.out / "forecasts.csv");
      std::ostringstream truth;
      csv::write_row(truth, {"treatment_id", "true_effect"});
      for (Eigen::Index k = 0; k < s.true_effects.size(); ++k) {
        csv::write_row(truth, {s.effects.treatment_ids()[static_cast<std::size_t>(k)],
                               csv::format_number(s.true_effects[k])});
      }
      write_file_atomically(truth_path, truth.str());
      written.push_back(truth_path);
    } else if (o.kind == "replication") {
      synthetic::ReplicationSpec spec;
      spec.studies = o.treatments;
      spec.forecasters = o.forecasters;
      spec.original_mean = o.effect_mean;
      spec.original_sd = o.effect_sd;
      spec.intercept = o.intercept;
      spec.slope = o.slope;
      spec.residual_sd = o.residual_sd;
      spec.replication_n = o.replication_n;
      spec.forecast_mean = o.forecast_mean;
      spec.forecast_skill = o.forecast_skill;
      spec.forecast_noise_sd = o.forecaster_noise_sd;
      spec.missing_rate = o.missing_rate;
      spec.seed = c.seed;
      const auto r = synthetic::generate_replication(spec);
      write_replication_study(r.dataset, c.out / "studies.csv", c.out / "forecasts.csv");
      written.push_back(c.out / "studies.csv");
      written.push_back(c.out / "forecasts.csv");
      std::ostringstream truth;
      csv::write_row(truth, {"study_id", "true_effect", "true_probability"});
      for (Eigen::Index k = 0; k < r.true_effect.size(); ++k) {
        csv::write_row(truth, {r.dataset.study_ids()[static_cast<std::size_t>(k)],
                               csv::format_number(r.true_effect[k]), csv::format_number(r.true_probability[k])});
      }
      write_file_atomically(truth_path, truth.str());
      written.push_back(truth_path);
    } else {
      throw ValidationError("unknown --kind '" + o.kind + "' (expected effect or replication)");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

std::string render_report(const EvaluationReport& report) {
  std::ostringstream out;
  const auto& m = report.metadata;
  out << "study: " << m.study;
  if (!m.units.empty()) out << " (" << m.units << ")";
  out << "\ncommand: " << m.command << "  eb: " << m.eb_kind << "  samples: " << m.samples
      << "  seed: " << m.seed << "\nconfig: " << m.config_hash << "  version: " << m.library_version << "\n";
  if (m.variance_floor_hit_rate) out << "variance floor hit rate: " << *m.variance_floor_hit_rate << "\n";
  for (const auto& note : m.notes) out << "note: " << note << "\n";
  std::size_t width = 8;
  for (const auto& r : report.rows) width = std::max(width, r.estimand.size());
  out << "\n" << std::left << std::setw(static_cast<int>(width)) << "estimand" << "  " << std::setw(13) << "loss"
      << std::right << std::setw(12) << "mean" << std::setw(26) << "95% interval" << std::setw(10) << "p\n";
  out << std::fixed;
  for (const auto& r : report.rows) {
    std::ostringstream ci;
    ci << std::fixed << std::setprecision(4) << "(" << r.ci_lower << ", " << r.ci_upper << ")";
    out << std::left << std::setw(static_cast<int>(width)) << r.estimand << "  " << std::setw(13)
        << to_string(r.loss) << std::right << std::setprecision(4) << std::setw(12) << r.mean << std::setw(26)
        << ci.str() << std::setprecision(4) << std::setw(10) << r.p_value << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluate forecasts of experimental results against baseline models", "feval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", library_version());

  RunConfig c;
  std::string eb = "auto";
  std::string loss;
  std::string models;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--eb", eb, "Empirical Bayes prior: auto, parametric or nonparametric")
        ->capture_default_str();
    sub->add_option("--loss", loss, "squared_error or brier");
    sub->add_option("--models", models, "Comma-separated baseline models");
    sub->add_option("--samples", c.samples, "Monte Carlo draws")->capture_default_str();
    sub->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
    sub->add_option("--out", c.out, "Output directory")->required();
    sub->add_option("--units", c.units, "Units label for the report");
    sub->add_option("--study", c.study, "Study label (default: input file stem)");
    sub->add_option("--threads", c.threads, "Worker threads (0: all cores)");
  };

  auto* evaluate = app.add_subcommand("evaluate", "Bias and risk of forecasts of treatment effects");
  evaluate->add_option("--effects", c.effects, "effects.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--forecasts", c.forecasts, "forecasts.csv")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--covariance", c.covariance, "Full covariance matrix CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--categories", c.categories, "Treatment categories CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--effort-conditions", c.effort_conditions, "effort_conditions.csv")
      ->check(CLI::ExistingFile);
  evaluate->add_option("--anchors", c.anchors, "Interpolation anchors, e.g. 0:1521,1:2029,10:2175");
  add_common(evaluate);

  auto* replication = app.add_subcommand("replication", "Brier risk of replication forecasts");
  replication->add_option("--replication", c.replication, "Replication studies CSV")
      ->required()
      ->check(CLI::ExistingFile);
  replication->add_option("--forecasts", c.forecasts, "Forecast probabilities CSV")
      ->required()
      ->check(CLI::ExistingFile);
  replication->add_option("--gibbs-draws", c.gibbs_draws, "Regression model draws")->capture_default_str();
  add_common(replication);

  auto* synth = app.add_subcommand("synth", "Write a synthetic study with known ground truth");
  auto& s = c.synth;
  synth->add_option("--kind", s.kind, "effect or replication")->capture_default_str();
  synth->add_option("--treatments", s.treatments, "Treatments (or studies)")->capture_default_str();
  synth->add_option("--forecasters", s.forecasters, "Forecasters")->capture_default_str();
  synth->add_option("--effect-mean", s.effect_mean, "Mean of true (or original) effects")->capture_default_str();
  synth->add_option("--effect-sd", s.effect_sd, "Spread of true (or original) effects")->capture_default_str();
  synth->add_option("--noise-sd", s.noise_sd, "Standard error of each estimate")->capture_default_str();
  synth->add_option("--bias", s.bias, "Forecaster bias")->capture_default_str();
  synth->add_option("--forecaster-noise-sd", s.forecaster_noise_sd, "Forecaster noise")->capture_default_str();
  synth->add_option("--missing-rate", s.missing_rate, "Share of skipped cells")->capture_default_str();
  synth->add_option("--groups", s.groups, "Forecaster groups as label:bias pairs");
  synth->add_option("--slope", s.slope, "Replication: slope on the original effect")->capture_default_str();
  synth->add_option("--intercept", s.intercept, "Replication: intercept")->capture_default_str();
  synth->add_option("--residual-sd", s.residual_sd, "Replication: residual sd")->capture_default_str();
  synth->add_option("--replication-n", s.replication_n, "Replication: sample size")->capture_default_str();
  synth->add_option("--forecast-mean", s.forecast_mean, "Replication: mean forecast")->capture_default_str();
  synth->add_option("--forecast-skill", s.forecast_skill, "Replication: forecast skill")->capture_default_str();
  synth->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", c.out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Print a report as a table");
  report->add_option("--input", c.input, "report.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    c.eb = parse_eb_choice(eb);
    if (!loss.empty()) c.loss = parse_loss_kind(loss);
    if (!models.empty()) {
      std::stringstream ss(models);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) c.models.push_back(item);
      }
    }
    if (evaluate->parsed()) {
      c.command = "evaluate";
      run_evaluate(c);
      out << "wrote " << (c.out / "report.json").string() << "\n";
    } else if (replication->parsed()) {
      c.command = "replication";
      run_replication(c);
      out << "wrote " << (c.out / "report.json").string() << "\n";
    } else if (synth->parsed()) {
      c.command = "synth";
      for (const auto& p : run_synth(c)) out << "wrote " << p.string() << "\n";
    } else if (report->parsed()) {
      std::ifstream in(*c.input);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(c.input->string() + ": " + e.what());
      }
      out << render_report(EvaluationReport::from_json(doc));
    }
  } catch (const std::exception& e) {
    err << "feval: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace feval::cli
