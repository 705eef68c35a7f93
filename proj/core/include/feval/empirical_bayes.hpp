#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "feval/data_model.hpp"
#include "feval/losses.hpp"
#include "feval/random.hpp"

namespace feval {

// Normal-normal empirical Bayes: mu ~ N(m 1, tau2 I), Y | mu ~ N(mu, Sigma).
struct ParametricEBFit {
  double prior_mean = 0.0;
  double prior_variance = 0.0;
  Eigen::VectorXd posterior_mean;
  Eigen::MatrixXd posterior_covariance;
  double log_marginal_likelihood = 0.0;
  int iterations = 0;
};

struct ParametricEBOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;  // relative bracket width for tau2
};

// Maximizes the marginal likelihood over (m, tau2); m is profiled out in
// closed form and tau2 found by golden-section search, clamped at 0.
// Requires K >= 2.
ParametricEBFit fit_parametric_eb(const EffectEstimates& data, const ParametricEBOptions& options = {});

// Exact conjugate posterior for an externally fixed prior.
ParametricEBFit conjugate_posterior(const EffectEstimates& data, double prior_mean,
                                    double prior_variance);

double log_marginal_likelihood(const EffectEstimates& data, double prior_mean,
                               double prior_variance);

// Kiefer-Wolfowitz NPMLE of the prior on a fixed grid.
struct NonparametricEBFit {
  Eigen::VectorXd grid;
  Eigen::VectorXd prior_weights;
  Eigen::MatrixXd posterior_weights;  // K x G, rows sum to 1
  double log_likelihood = 0.0;
  // Certified upper bound on (grid optimum - log_likelihood).
  double optimality_gap = 0.0;
  std::vector<double> log_likelihood_trace;  // one entry per EM iterate
  int iterations = 0;
  std::vector<std::string> warnings;

  Eigen::VectorXd posterior_mean() const { return posterior_weights * grid; }
};

struct NonparametricEBOptions {
  int grid_size = 300;
  // Stop once the certified optimality gap is below tolerance * max(1, |l|).
  double tolerance = 1e-9;
  int max_iterations = 20000;  // accelerated iterations (3 EM maps each)
  // Overrides the default grid [min Y - 3 max se, max Y + 3 max se].
  std::optional<Eigen::VectorXd> grid;
};

// Requires a diagonal covariance with strictly positive variances.
NonparametricEBFit fit_nonparametric_eb(const EffectEstimates& data,
                                        const NonparametricEBOptions& options = {});

Eigen::VectorXd default_npmle_grid(const EffectEstimates& data, int grid_size);

// sum_k log sum_g w_g phi((y_k - grid_g) / se_k) / se_k
double npmle_log_likelihood(const Eigen::VectorXd& estimates, const Eigen::VectorXd& standard_errors,
                            const Eigen::VectorXd& grid, const Eigen::VectorXd& weights);

// Draws from mu | Y. Optionally maps each draw through the replication link
// mu_k = Phi(sqrt(n_k) mu*_k - c_alpha_k), so draws are replication
// probabilities rather than normalized effects.
class PosteriorSampler {
 public:
  enum class Kind { parametric, nonparametric };

  static PosteriorSampler parametric(const ParametricEBFit& fit, std::uint64_t seed);
  static PosteriorSampler nonparametric(const NonparametricEBFit& fit, std::uint64_t seed);
  // Degenerate posterior concentrated at `mu`.
  static PosteriorSampler point_mass(const Eigen::VectorXd& mu, std::uint64_t seed = 0);

  PosteriorSampler with_replication_link(const Eigen::VectorXi& n, const Eigen::VectorXd& alpha) const;

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return mean_.size(); }
  std::uint64_t seed() const { return seed_; }
  bool has_replication_link() const { return link_.has_value(); }

  // One draw from the stream `rng` into `out` (length K).
  void draw(Rng& rng, Eigen::Ref<Eigen::VectorXd> out) const;

  // count x K draws; row s uses substream s of the sampler's seed.
  Eigen::MatrixXd sample(Eigen::Index count) const;

  // Exact posterior mean of the (linked) quantity.
  Eigen::VectorXd posterior_mean() const;

 private:
  struct Link {
    Eigen::VectorXd sqrt_n;
    Eigen::VectorXd critical;
  };

  PosteriorSampler() = default;
  void apply_link(Eigen::Ref<Eigen::VectorXd> values) const;

  Kind kind_ = Kind::parametric;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd mean_;
  // parametric: draw = mean + factor * z with factor * factor^T = covariance
  Eigen::MatrixXd factor_;
  Eigen::VectorXd marginal_variance_;
  bool degenerate_ = false;
  // nonparametric: per-treatment cumulative posterior weights over the grid
  Eigen::VectorXd grid_;
  Eigen::MatrixXd posterior_weights_;
  Eigen::MatrixXd cumulative_;
  std::optional<Link> link_;
};

// Bayes-optimal prediction given only the experiment: the posterior mean
// (of the replication probability when the sampler carries the link). It is
// optimal for squared error and for expected Brier score alike.
Eigen::VectorXd oracle_predictions(const PosteriorSampler& sampler, LossKind kind);

}  // namespace feval
