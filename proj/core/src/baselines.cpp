#include "feval/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "feval/csv.hpp"
#include "feval/errors.hpp"
#include "feval/normal.hpp"
#include "feval/random.hpp"

namespace feval {

Eigen::VectorXd null_effect_predictions(Eigen::Index k) {
  if (k < 1) throw DomainError("need at least one treatment");
  return Eigen::VectorXd::Zero(k);
}

Eigen::VectorXd random_chance_predictions(Eigen::Index k) {
  if (k < 1) throw DomainError("need at least one study");
  return Eigen::VectorXd::Constant(k, 0.5);
}

Eigen::VectorXd null_replication_predictions(Eigen::Index k, double alpha) {
  if (k < 1) throw DomainError("need at least one study");
  return Eigen::VectorXd::Constant(k, normal_cdf(-critical_value(alpha)));
}

double replication_probability(double mu_star, double n, double alpha) {
  if (!(n >= 1.0)) throw DomainError("replication sample size must be >= 1");
  return normal_cdf(std::sqrt(n) * mu_star - critical_value(alpha));
}

// ---------------------------------------------------------------------------

double effective_payment(const EffortConditionSpec& condition, InterpolationMode mode) {
  switch (condition.incentive_kind) {
    case IncentiveKind::other:
      return 0.0;
    case IncentiveKind::piece_rate_self:
    case IncentiveKind::piece_rate_charity: {
      double pay = condition.own_cents_per_100;
      if (mode == InterpolationMode::altruistic) pay += condition.charity_cents_per_100;
      return pay;
    }
  }
  return 0.0;
}

Eigen::VectorXd linear_interpolation_predictions(const std::vector<EffortConditionSpec>& conditions,
                                                 const std::array<EffortAnchor, 3>& anchors,
                                                 InterpolationMode mode) {
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!std::isfinite(anchors[i].payment) || !std::isfinite(anchors[i].points)) {
      throw DomainError("interpolation anchors must be finite");
    }
    if (i > 0 && !(anchors[i].payment > anchors[i - 1].payment)) {
      throw DomainError("interpolation anchor payments must be strictly increasing");
    }
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(conditions.size()));
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    const double pay = effective_payment(conditions[c], mode);
    if (!(pay >= 0.0)) {
      throw DomainError("condition '" + conditions[c].condition_id +
                        "' has a negative effective payment");
    }
    const auto exact = std::find_if(anchors.begin(), anchors.end(),
                                    [pay](const EffortAnchor& a) { return a.payment == pay; });
    if (exact != anchors.end()) {
      out[static_cast<Eigen::Index>(c)] = exact->points;
      continue;
    }
    const std::size_t seg = pay <= anchors[1].payment ? 0 : 1;
    const EffortAnchor& a = anchors[seg];
    const EffortAnchor& b = anchors[seg + 1];
    out[static_cast<Eigen::Index>(c)] =
        a.points + (pay - a.payment) / (b.payment - a.payment) * (b.points - a.points);
  }
  return out;
}

IncentiveKind parse_incentive_kind(const std::string& name) {
  if (name == "piece_rate_self") return IncentiveKind::piece_rate_self;
  if (name == "piece_rate_charity") return IncentiveKind::piece_rate_charity;
  if (name == "other") return IncentiveKind::other;
  throw ValidationError("unknown incentive_kind '" + name +
                        "' (expected piece_rate_self, piece_rate_charity or other)");
}

std::vector<EffortConditionSpec> load_effort_conditions(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::size_t c_id = table.require_column("condition_id");
  const std::size_t c_kind = table.require_column("incentive_kind");
  const std::size_t c_own = table.require_column("own_cents_per_100");
  const std::size_t c_charity = table.require_column("charity_cents_per_100");
  std::vector<EffortConditionSpec> out;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    EffortConditionSpec spec;
    spec.condition_id = table.text(r, c_id);
    try {
      spec.incentive_kind = parse_incentive_kind(table.text(r, c_kind));
    } catch (const ValidationError& e) {
      throw ValidationError(table.source() + ": " + e.what(), r + 1, "incentive_kind");
    }
    spec.own_cents_per_100 = table.number(r, c_own);
    spec.charity_cents_per_100 = table.number(r, c_charity);
    if (spec.own_cents_per_100 < 0.0) {
      throw ValidationError(table.source() + ": payments must be >= 0", r + 1, "own_cents_per_100");
    }
    if (spec.charity_cents_per_100 < 0.0) {
      throw ValidationError(table.source() + ": payments must be >= 0", r + 1,
                            "charity_cents_per_100");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct OlsFit {
  Eigen::Vector2d coef;
  Eigen::Matrix2d covariance;  // sigma2_hat (Z^T Z)^{-1}
};

Eigen::MatrixXd design(const Eigen::VectorXd& original_effect) {
  Eigen::MatrixXd z(original_effect.size(), 2);
  z.col(0).setOnes();
  z.col(1) = original_effect;
  return z;
}

OlsFit ols(const Eigen::MatrixXd& z, const Eigen::Matrix2d& ztz_inv, const Eigen::VectorXd& y) {
  OlsFit fit;
  fit.coef = ztz_inv * (z.transpose() * y);
  const double rss = (y - z * fit.coef).squaredNorm();
  const double sigma2 = rss / static_cast<double>(z.rows() - 2);
  fit.covariance = sigma2 * ztz_inv;
  return fit;
}

// Draw from N(mean, cov) for a 2x2 PSD covariance.
Eigen::Vector2d draw_bivariate(Rng& rng, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const Eigen::Vector2d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Vector2d z(rng.normal(), rng.normal());
  return mean + eig.eigenvectors() * root.cwiseProduct(z);
}

void check_regression_inputs(const Eigen::VectorXd& original_effect, const Eigen::VectorXd& y_star,
                             const Eigen::VectorXd& n, const Eigen::VectorXd& alpha) {
  const Eigen::Index k = original_effect.size();
  if (k < 3) throw DomainError("linear regression replication model needs K >= 3 studies");
  if (y_star.size() != k || n.size() != k || alpha.size() != k) {
    throw DomainError("regression inputs have different lengths");
  }
  if ((original_effect.array() == original_effect[0]).all()) {
    throw DomainError("degenerate design: original effects are constant");
  }
}

}  // namespace

Eigen::VectorXd plug_in_regression_probabilities(const Eigen::VectorXd& original_effect,
                                                 const Eigen::VectorXd& y_star,
                                                 const Eigen::VectorXd& n,
                                                 const Eigen::VectorXd& alpha) {
  check_regression_inputs(original_effect, y_star, n, alpha);
  const Eigen::MatrixXd z = design(original_effect);
  const Eigen::Matrix2d ztz_inv = (z.transpose() * z).inverse();
  const Eigen::VectorXd fitted = z * ols(z, ztz_inv, y_star).coef;
  Eigen::VectorXd out(fitted.size());
  for (Eigen::Index k = 0; k < fitted.size(); ++k) {
    out[k] = normal_cdf(std::sqrt(n[k]) * fitted[k] - critical_value(alpha[k]));
  }
  return out;
}

GibbsRegressionResult gibbs_regression_replication(const Eigen::VectorXd& original_effect,
                                                   const Eigen::VectorXd& y_star,
                                                   const Eigen::VectorXd& n,
                                                   const Eigen::VectorXd& alpha, int draws,
                                                   std::uint64_t seed) {
  check_regression_inputs(original_effect, y_star, n, alpha);
  if (draws < kGibbsMinDraws) {
    throw DomainError("Gibbs regression needs at least " + std::to_string(kGibbsMinDraws) +
                      " draws for a stable estimate");
  }
  const Eigen::Index k = original_effect.size();
  const Eigen::MatrixXd z = design(original_effect);
  const Eigen::Matrix2d ztz_inv = (z.transpose() * z).inverse();
  const OlsFit beta_fit = ols(z, ztz_inv, y_star);
  const Eigen::VectorXd sqrt_n = n.cwiseSqrt();
  Eigen::VectorXd critical(k);
  for (Eigen::Index i = 0; i < k; ++i) critical[i] = critical_value(alpha[i]);

  GibbsRegressionResult out;
  out.beta_hat = beta_fit.coef;
  out.gamma_hat = ols(z, ztz_inv, (z * beta_fit.coef - y_star).array().square().matrix()).coef;
  out.probability_draws.resize(draws, k);
  out.prediction_draws.resize(draws, k);
  long long floor_hits = 0;
  for (int s = 0; s < draws; ++s) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(s));
    const Eigen::Vector2d beta = draw_bivariate(rng, beta_fit.coef, beta_fit.covariance);
    const Eigen::VectorXd fitted = z * beta;
    const Eigen::VectorXd sq_resid = (fitted - y_star).array().square();
    const OlsFit gamma_fit = ols(z, ztz_inv, sq_resid);
    const Eigen::Vector2d gamma = draw_bivariate(rng, gamma_fit.coef, gamma_fit.covariance);
    const Eigen::VectorXd variance = z * gamma;
    for (Eigen::Index i = 0; i < k; ++i) {
      double v = variance[i];
      if (!(v >= kGibbsVarianceFloor)) {
        v = kGibbsVarianceFloor;
        ++floor_hits;
      }
      const double y = rng.normal(fitted[i], std::sqrt(v));
      out.probability_draws(s, i) = normal_cdf(sqrt_n[i] * y - critical[i]);
      out.prediction_draws(s, i) =
          normal_cdf((sqrt_n[i] * fitted[i] - critical[i]) / std::sqrt(1.0 + n[i] * v));
    }
  }
  out.mean_probability = out.probability_draws.colwise().mean().transpose();
  out.variance_floor_hit_rate =
      static_cast<double>(floor_hits) / (static_cast<double>(draws) * static_cast<double>(k));
  return out;
}

GibbsRegressionResult gibbs_regression_replication(const ReplicationDataset& dataset, int draws,
                                                   std::uint64_t seed) {
  return gibbs_regression_replication(dataset.original_effect(), backout_replication_effect(dataset),
                                      dataset.replication_n().cast<double>(), dataset.alpha(),
                                      draws, seed);
}

}  // namespace feval
