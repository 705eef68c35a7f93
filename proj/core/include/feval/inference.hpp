#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "feval/data_model.hpp"
#include "feval/empirical_bayes.hpp"
#include "feval/losses.hpp"

namespace feval {

enum class EstimandKind {
  bias_overall,
  bias_per_treatment,
  bias_difference,
  bias_by_category,
  bias_by_group,
  risk_forecasters,
  risk_model,
  risk_oracle,
  comparative_risk,
};

struct EstimandSpec {
  EstimandKind kind = EstimandKind::bias_overall;
  LossKind loss = LossKind::squared_error;
  std::string treatment;        // bias_per_treatment; k of bias_difference
  std::string other_treatment;  // l of bias_difference
  std::string category;         // bias_by_category
  std::string group;            // bias_by_group
  std::string model;            // risk_model, comparative_risk

  static EstimandSpec bias() { return {}; }
  static EstimandSpec bias_for(std::string treatment_id);
  static EstimandSpec bias_between(std::string k, std::string l);
  static EstimandSpec bias_in_category(std::string label);
  static EstimandSpec bias_in_group(std::string label);
  static EstimandSpec forecaster_risk(LossKind loss);
  static EstimandSpec model_risk(std::string model_id, LossKind loss);
  static EstimandSpec oracle_risk(LossKind loss);
  static EstimandSpec comparative(std::string model_id, LossKind loss);

  bool is_bias() const;
  // Stable identifier used in reports, e.g. "comparative_risk:null".
  std::string label() const;
};

// A baseline's predictions. Stochastic models carry a draws x K matrix; each
// Monte Carlo iteration then uses one of its rows chosen at random.
struct ModelPredictions {
  std::string id;
  Eigen::VectorXd point;
  Eigen::MatrixXd draws;

  bool stochastic() const { return draws.size() > 0; }
};

using ModelSet = std::map<std::string, ModelPredictions>;

enum class Weighting { dirichlet, uniform };

inline constexpr Eigen::Index kDefaultSamples = 10000;
inline constexpr Eigen::Index kMinSamples = 1000;

struct InferenceOptions {
  Eigen::Index samples = kDefaultSamples;
  std::uint64_t seed = 0;
  // uniform replaces the Bayesian-bootstrap weights by 1/K and 1/F.
  Weighting weighting = Weighting::dirichlet;
  double level = 0.95;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Monte Carlo summary of one estimand.
struct EstimateSummary {
  std::string estimand;
  LossKind loss = LossKind::squared_error;
  double mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double pr_negative = 0.0;
  double pr_positive = 0.0;
  double pr_zero = 0.0;
  // min(2 min(Pr{<= 0}, Pr{>= 0}), 1)
  double p_value = 1.0;
  double mc_standard_error = 0.0;
  Eigen::Index n_samples = 0;
  std::uint64_t seed = 0;
};

// N_S x J matrix of estimand draws. Column j holds specs[j]; every column is
// computed from the same posterior and bootstrap draws, and draw s depends
// only on (seed, s).
Eigen::MatrixXd draw_estimands(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                               const std::vector<EstimandSpec>& specs, const ModelSet& models,
                               const InferenceOptions& options);

EstimateSummary summarize(const Eigen::Ref<const Eigen::VectorXd>& draws, const std::string& label,
                          LossKind loss, const InferenceOptions& options);

EstimateSummary estimate(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                         const EstimandSpec& spec, const ModelSet& models,
                         const InferenceOptions& options);

std::vector<EstimateSummary> estimate_all(const ForecastMatrix& forecasts,
                                          const PosteriorSampler& sampler,
                                          const std::vector<EstimandSpec>& specs,
                                          const ModelSet& models, const InferenceOptions& options);

// Simultaneous band from shared draws (max-statistic method). Each marginal
// equal-tailed interval is stretched about the mean by q / c_j, where c_j is
// the `level` quantile of |t_j| and q that of max_j |t_j|, t_j being the
// standardized deviation of estimand j. Since q >= c_j the band always
// contains the marginal interval.
struct SimultaneousBand {
  double mean = 0.0;
  double marginal_lower = 0.0;
  double marginal_upper = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double critical_value = 0.0;  // q
  bool significant = false;     // band excludes 0
};

std::vector<SimultaneousBand> simultaneous_bands(const Eigen::MatrixXd& draws, double level);

struct SimultaneousInference {
  std::vector<std::string> labels;
  std::vector<EstimateSummary> estimates;
  std::vector<SimultaneousBand> bands;
};

// Per-treatment bias B_k for every treatment with simultaneous bands.
SimultaneousInference per_treatment_bias_simultaneous(const ForecastMatrix& forecasts,
                                                      const PosteriorSampler& sampler,
                                                      const InferenceOptions& options);

// Bias within each forecaster group plus all pairwise differences
// (first minus second, groups in sorted order), jointly adjusted.
SimultaneousInference subgroup_bias(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                                    const InferenceOptions& options);

// Sign-coded bias per treatment category; difference categories use the
// paired-difference estimand. Bands are simultaneous across categories.
SimultaneousInference category_bias(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                                    const InferenceOptions& options);

// Type-7 (linear interpolation) sample quantile; `sorted` must be ascending.
double sorted_quantile(const std::vector<double>& sorted, double q);

}  // namespace feval
