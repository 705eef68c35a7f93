#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "feval/data_model.hpp"
#include "feval/inference.hpp"

namespace feval::synthetic {

struct PointMassPrior {
  double value = 0.0;
};
struct NormalPrior {
  double mean = 0.0;
  double variance = 1.0;
};
struct TwoPointPrior {
  double low = -1.0;
  double high = 1.0;
  double p_high = 0.5;
};
using EffectPrior = std::variant<PointMassPrior, NormalPrior, TwoPointPrior>;

struct GroupSpec {
  std::string label;
  double bias = 0.0;
};

// Ground-truth-known prediction study:
//   mu_k ~ prior, Y_k = mu_k + N(0, noise_sd_k^2),
//   X_kf = mu_k + bias_f + N(0, forecaster_noise_sd^2),
// cells dropped independently with probability missing_rate.
struct SyntheticStudySpec {
  Eigen::Index treatments = 10;
  Eigen::Index forecasters = 5;
  EffectPrior prior = NormalPrior{};
  // Length 1 (shared) or length `treatments`.
  Eigen::VectorXd noise_sd = Eigen::VectorXd::Constant(1, 0.1);
  double forecaster_bias = 0.0;
  double forecaster_noise_sd = 1.0;
  double missing_rate = 0.0;
  // When non-empty, forecaster f joins groups[f % groups.size()] and takes its
  // bias instead of forecaster_bias.
  std::vector<GroupSpec> groups;
  std::uint64_t seed = 0;
};

struct SyntheticStudy {
  Eigen::VectorXd true_effects;
  EffectEstimates effects;
  ForecastMatrix forecasts;
  int attempts = 1;
};

inline constexpr int kMaxGenerationAttempts = 100;

// Deterministic in spec.seed. A missing mask that leaves a treatment or a
// forecaster without forecasts is redrawn from the next seed, up to
// kMaxGenerationAttempts times.
SyntheticStudy generate(const SyntheticStudySpec& spec);

// Replication-project analogue: original effects o_k ~ N(original_mean,
// original_sd^2), mu*_k = intercept + slope o_k + N(0, residual_sd^2), the
// replication estimate Y*_k ~ N(mu*_k, 1/n) reported as (p, direction), and
// forecasts clamp(forecast_mean + skill (mu_k - mean mu) + noise, 0, 1).
struct ReplicationSpec {
  Eigen::Index studies = 44;
  Eigen::Index forecasters = 20;
  double original_mean = 0.4;
  double original_sd = 0.2;
  double intercept = 0.0;
  double slope = 0.5;
  double residual_sd = 0.0;
  int replication_n = 100;
  double alpha = 0.05;
  double forecast_mean = 0.5;
  double forecast_skill = 0.0;
  double forecast_noise_sd = 0.1;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticReplication {
  Eigen::VectorXd true_effect;       // mu*
  Eigen::VectorXd true_probability;  // mu
  ReplicationDataset dataset;
};

SyntheticReplication generate_replication(const ReplicationSpec& spec);

// Estimand evaluated exactly against known effects by plain averaging over
// observed cells (no weights, no posterior). risk_oracle reads the oracle's
// predictions from models["oracle"].
double brute_force_estimand(const Eigen::VectorXd& true_effects, const ForecastMatrix& forecasts,
                            const EstimandSpec& spec, const ModelSet& models = {});

}  // namespace feval::synthetic
