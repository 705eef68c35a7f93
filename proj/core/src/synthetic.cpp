#include "feval/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "feval/errors.hpp"
#include "feval/normal.hpp"
#include "feval/random.hpp"

namespace feval::synthetic {

namespace {

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index count) {
  std::vector<std::string> out;
  const int width = static_cast<int>(std::to_string(std::max<Eigen::Index>(count - 1, 0)).size());
  for (Eigen::Index i = 0; i < count; ++i) {
    std::string digits = std::to_string(i);
    out.push_back(prefix + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
  }
  return out;
}

double draw_effect(const EffectPrior& prior, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PointMassPrior>) {
          return p.value;
        } else if constexpr (std::is_same_v<T, NormalPrior>) {
          return rng.normal(p.mean, std::sqrt(p.variance));
        } else {
          return rng.uniform() < p.p_high ? p.high : p.low;
        }
      },
      prior);
}

void validate(const SyntheticStudySpec& spec) {
  if (spec.treatments < 1 || spec.forecasters < 1) {
    throw DomainError("synthetic study needs at least one treatment and one forecaster");
  }
  if (spec.noise_sd.size() != 1 && spec.noise_sd.size() != spec.treatments) {
    throw DomainError("noise_sd must have length 1 or K");
  }
  if ((spec.noise_sd.array() < 0.0).any() || spec.forecaster_noise_sd < 0.0) {
    throw DomainError("noise parameters must be >= 0");
  }
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
    throw DomainError("missing_rate must lie in [0, 1)");
  }
  if (const auto* n = std::get_if<NormalPrior>(&spec.prior); n && n->variance < 0.0) {
    throw DomainError("prior variance must be >= 0");
  }
  if (const auto* t = std::get_if<TwoPointPrior>(&spec.prior);
      t && !(t->p_high >= 0.0 && t->p_high <= 1.0)) {
    throw DomainError("two-point prior weight must lie in [0, 1]");
  }
}

BoolMatrix draw_mask(Eigen::Index k, Eigen::Index f, double rate, Rng& rng) {
  BoolMatrix mask(k, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) mask(i, j) = rate == 0.0 || rng.uniform() >= rate;
  }
  return mask;
}

bool mask_ok(const BoolMatrix& mask) {
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    if (!mask.row(i).any()) return false;
  }
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    if (!mask.col(j).any()) return false;
  }
  return true;
}

}  // namespace

SyntheticStudy generate(const SyntheticStudySpec& spec) {
  validate(spec);
  const Eigen::Index k = spec.treatments;
  const Eigen::Index f = spec.forecasters;
  Rng rng = Rng::substream(spec.seed, 0);

  Eigen::VectorXd mu(k);
  for (Eigen::Index i = 0; i < k; ++i) mu[i] = draw_effect(spec.prior, rng);
  const Eigen::VectorXd sd =
      spec.noise_sd.size() == 1 ? Eigen::VectorXd::Constant(k, spec.noise_sd[0]) : spec.noise_sd;
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) y[i] = mu[i] + sd[i] * rng.normal();

  Eigen::VectorXd bias = Eigen::VectorXd::Constant(f, spec.forecaster_bias);
  const std::vector<std::string> forecaster_ids = numbered("f", f);
  std::map<std::string, std::string> groups;
  if (!spec.groups.empty()) {
    for (Eigen::Index j = 0; j < f; ++j) {
      const auto& g = spec.groups[static_cast<std::size_t>(j) % spec.groups.size()];
      bias[j] = g.bias;
      groups[forecaster_ids[static_cast<std::size_t>(j)]] = g.label;
    }
  }
  Eigen::MatrixXd x(k, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      x(i, j) = mu[i] + bias[j] + spec.forecaster_noise_sd * rng.normal();
    }
  }

  int attempts = 0;
  BoolMatrix mask;
  do {
    if (++attempts > kMaxGenerationAttempts) {
      throw DomainError("could not draw a missing mask leaving every treatment and forecaster "
                        "with a forecast after " +
                        std::to_string(kMaxGenerationAttempts) + " attempts");
    }
    Rng mask_rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(attempts));
    mask = draw_mask(k, f, spec.missing_rate, mask_rng);
  } while (!mask_ok(mask));

  const std::vector<std::string> treatment_ids = numbered("t", k);
  return SyntheticStudy{
      mu, EffectEstimates::from_variances(treatment_ids, y, sd.array().square().matrix()),
      ForecastMatrix(treatment_ids, forecaster_ids, std::move(x), std::move(mask), std::move(groups)),
      attempts};
}

SyntheticReplication generate_replication(const ReplicationSpec& spec) {
  if (spec.studies < 3 || spec.forecasters < 1) {
    throw DomainError("synthetic replication needs >= 3 studies and >= 1 forecaster");
  }
  if (spec.replication_n < 2) throw DomainError("replication_n must be >= 2");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
    throw DomainError("missing_rate must lie in [0, 1)");
  }
  const Eigen::Index k = spec.studies;
  const Eigen::Index f = spec.forecasters;
  Rng rng = Rng::substream(spec.seed, 0);
  const double c = critical_value(spec.alpha);
  const double sqrt_n = std::sqrt(static_cast<double>(spec.replication_n));

  Eigen::VectorXd orig(k), mu_star(k), prob(k), p(k);
  Eigen::VectorXi direction(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    orig[i] = rng.normal(spec.original_mean, spec.original_sd);
    mu_star[i] = spec.intercept + spec.slope * orig[i] + spec.residual_sd * rng.normal();
    prob[i] = normal_cdf(sqrt_n * mu_star[i] - c);
    const double z = sqrt_n * mu_star[i] + rng.normal();
    direction[i] = z >= 0.0 ? 1 : -1;
    p[i] = std::clamp(2.0 * normal_cdf(-std::abs(z)), 1e-300, 1.0);
  }
  const double mean_prob = prob.mean();
  Eigen::MatrixXd x(k, f);
  for (Eigen::Index j = 0; j < f; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const double v = spec.forecast_mean + spec.forecast_skill * (prob[i] - mean_prob) +
                       spec.forecast_noise_sd * rng.normal();
      x(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  int attempts = 0;
  BoolMatrix mask;
  do {
    if (++attempts > kMaxGenerationAttempts) {
      throw DomainError("could not draw a valid missing mask for the replication study");
    }
    Rng mask_rng = Rng::substream(spec.seed, static_cast<std::uint64_t>(attempts));
    mask = draw_mask(k, f, spec.missing_rate, mask_rng);
  } while (!mask_ok(mask));

  const auto ids = numbered("s", k);
  ForecastMatrix forecasts(ids, numbered("f", f), std::move(x), std::move(mask));
  return SyntheticReplication{
      mu_star, prob,
      ReplicationDataset(ids, orig, Eigen::VectorXi::Constant(k, spec.replication_n), p, direction,
                         Eigen::VectorXd::Constant(k, spec.alpha), std::move(forecasts))};
}

double brute_force_estimand(const Eigen::VectorXd& mu, const ForecastMatrix& fm,
                            const EstimandSpec& spec, const ModelSet& models) {
  const auto& x = fm.predictions();
  const auto row_of = [&](const std::string& id) {
    const auto& ids = fm.treatment_ids();
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw DomainError("unknown treatment '" + id + "'");
    return static_cast<Eigen::Index>(it - ids.begin());
  };
  const auto model_of = [&](const std::string& id) -> const Eigen::VectorXd& {
    const auto it = models.find(id);
    if (it == models.end()) throw DomainError("unknown model '" + id + "'");
    return it->second.point;
  };
  // Mean of g(k, f) over observed cells passing `keep`.
  const auto cell_mean = [&](auto keep, auto g) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index k = 0; k < fm.treatments(); ++k) {
      for (Eigen::Index f = 0; f < fm.forecasters(); ++f) {
        if (fm.is_observed(k, f) && keep(k, f)) {
          sum += g(k, f);
          ++count;
        }
      }
    }
    if (count == 0) throw DomainError("no observed cells for " + spec.label());
    return sum / static_cast<double>(count);
  };
  const auto all = [](Eigen::Index, Eigen::Index) { return true; };
  const auto difference = [&](Eigen::Index a, Eigen::Index b) {
    double sum = 0.0;
    long count = 0;
    for (Eigen::Index f = 0; f < fm.forecasters(); ++f) {
      if (!fm.is_observed(a, f) || !fm.is_observed(b, f)) continue;
      sum += (x(a, f) - x(b, f)) - (mu[a] - mu[b]);
      ++count;
    }
    if (count == 0) throw DomainError("no forecaster predicted both treatments");
    return sum / static_cast<double>(count);
  };

  switch (spec.kind) {
    case EstimandKind::bias_overall:
      return cell_mean(all, [&](Eigen::Index k, Eigen::Index f) { return x(k, f) - mu[k]; });
    case EstimandKind::bias_per_treatment: {
      const Eigen::Index row = row_of(spec.treatment);
      return cell_mean([&](Eigen::Index k, Eigen::Index) { return k == row; },
                       [&](Eigen::Index k, Eigen::Index f) { return x(k, f) - mu[k]; });
    }
    case EstimandKind::bias_difference:
      return difference(row_of(spec.treatment), row_of(spec.other_treatment));
    case EstimandKind::bias_by_category: {
      const auto& cats = fm.categories().value();
      std::map<Eigen::Index, int> members;
      for (const auto& [id, cat] : cats.by_treatment) {
        if (cat.label == spec.category) members[row_of(id)] = cat.sign;
      }
      if (cats.kind_of(spec.category) == CategoryKind::difference) {
        Eigen::Index plus = -1, minus = -1;
        for (const auto& [row, sign] : members) (sign > 0 ? plus : minus) = row;
        return difference(plus, minus);
      }
      return cell_mean([&](Eigen::Index k, Eigen::Index) { return members.count(k) > 0; },
                       [&](Eigen::Index k, Eigen::Index f) { return members.at(k) * (x(k, f) - mu[k]); });
    }
    case EstimandKind::bias_by_group: {
      return cell_mean(
          [&](Eigen::Index, Eigen::Index f) {
            const auto it = fm.forecaster_groups().find(fm.forecaster_ids()[f]);
            return it != fm.forecaster_groups().end() && it->second == spec.group;
          },
          [&](Eigen::Index k, Eigen::Index f) { return x(k, f) - mu[k]; });
    }
    case EstimandKind::risk_forecasters:
      return cell_mean(all, [&](Eigen::Index k, Eigen::Index f) { return loss(spec.loss, mu[k], x(k, f)); });
    case EstimandKind::risk_model:
    case EstimandKind::risk_oracle: {
      const Eigen::VectorXd& pred = model_of(spec.kind == EstimandKind::risk_oracle ? "oracle" : spec.model);
      double sum = 0.0;
      for (Eigen::Index k = 0; k < mu.size(); ++k) sum += loss(spec.loss, mu[k], pred[k]);
      return sum / static_cast<double>(mu.size());
    }
    case EstimandKind::comparative_risk: {
      const Eigen::VectorXd& pred = model_of(spec.model);
      return cell_mean(all, [&](Eigen::Index k, Eigen::Index f) {
        return loss(spec.loss, mu[k], x(k, f)) - loss(spec.loss, mu[k], pred[k]);
      });
    }
  }
  return 0.0;
}

}  // namespace feval::synthetic
