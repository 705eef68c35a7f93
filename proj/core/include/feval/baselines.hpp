#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "feval/data_model.hpp"

namespace feval {

// "Treatments have no effect."
Eigen::VectorXd null_effect_predictions(Eigen::Index k);

// "Each study has a 50% chance of replicating."
Eigen::VectorXd random_chance_predictions(Eigen::Index k);

// "Every published effect is null": replication succeeds only when the
// replication is significant in the original direction by chance,
// Phi(-c_alpha) = alpha / 2.
Eigen::VectorXd null_replication_predictions(Eigen::Index k, double alpha);

// Phi(sqrt(n) mu_star - c_alpha).
double replication_probability(double mu_star, double n, double alpha);

// ---------------------------------------------------------------------------
// Effort study: linear interpolation between the piece-rate anchors.

enum class IncentiveKind { piece_rate_self, piece_rate_charity, other };
enum class InterpolationMode { selfish, altruistic };

struct EffortConditionSpec {
  std::string condition_id;
  IncentiveKind incentive_kind = IncentiveKind::other;
  double own_cents_per_100 = 0.0;
  double charity_cents_per_100 = 0.0;
};

struct EffortAnchor {
  double payment = 0.0;  // cents per 100 points
  double points = 0.0;
};

// Payment the model believes drives effort. Conditions that are not piece
// rates map to zero; charity pay counts only in altruistic mode.
double effective_payment(const EffortConditionSpec& condition, InterpolationMode mode);

// Piecewise-linear through three anchors with strictly increasing payments;
// extrapolates along the outer segments.
Eigen::VectorXd linear_interpolation_predictions(const std::vector<EffortConditionSpec>& conditions,
                                                 const std::array<EffortAnchor, 3>& anchors,
                                                 InterpolationMode mode);

std::vector<EffortConditionSpec> load_effort_conditions(const std::filesystem::path& path);
IncentiveKind parse_incentive_kind(const std::string& name);

// ---------------------------------------------------------------------------
// Linear regression replication model (Gibbs sampler with heteroskedastic
// error variance linear in the features).

struct GibbsRegressionResult {
  Eigen::VectorXd mean_probability;  // per-study mean of the draws below
  // draws x K: Phi(sqrt(n_k) Y^s_k - c_alpha) with Y^s_k sampled each iteration
  Eigen::MatrixXd probability_draws;
  // draws x K: replication probability conditional on the iteration's
  // parameters, E[Phi(sqrt(n) Y - c) | beta^s, gamma^s]. Used as the model's
  // stochastic prediction in risk estimation.
  Eigen::MatrixXd prediction_draws;
  Eigen::Vector2d beta_hat;
  Eigen::Vector2d gamma_hat;
  double variance_floor_hit_rate = 0.0;
};

inline constexpr double kGibbsVarianceFloor = 1e-8;
inline constexpr int kGibbsMinDraws = 100;

GibbsRegressionResult gibbs_regression_replication(const ReplicationDataset& dataset, int draws,
                                                   std::uint64_t seed);

// Core routine on raw inputs: regress y_star on [1, original_effect].
GibbsRegressionResult gibbs_regression_replication(const Eigen::VectorXd& original_effect,
                                                   const Eigen::VectorXd& y_star,
                                                   const Eigen::VectorXd& n,
                                                   const Eigen::VectorXd& alpha, int draws,
                                                   std::uint64_t seed);

// Phi(sqrt(n_k) beta_hat^T Z_k - c_alpha) with the OLS fit and no parameter
// or residual uncertainty.
Eigen::VectorXd plug_in_regression_probabilities(const Eigen::VectorXd& original_effect,
                                                 const Eigen::VectorXd& y_star,
                                                 const Eigen::VectorXd& n,
                                                 const Eigen::VectorXd& alpha);

}  // namespace feval
