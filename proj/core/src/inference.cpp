#include "feval/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "feval/errors.hpp"
#include "feval/random.hpp"

namespace feval {

// ---------------------------------------------------------------------------
// EstimandSpec

EstimandSpec EstimandSpec::bias_for(std::string treatment_id) {
  EstimandSpec s;
  s.kind = EstimandKind::bias_per_treatment;
  s.treatment = std::move(treatment_id);
  return s;
}

EstimandSpec EstimandSpec::bias_between(std::string k, std::string l) {
  EstimandSpec s;
  s.kind = EstimandKind::bias_difference;
  s.treatment = std::move(k);
  s.other_treatment = std::move(l);
  return s;
}

EstimandSpec EstimandSpec::bias_in_category(std::string label) {
  EstimandSpec s;
  s.kind = EstimandKind::bias_by_category;
  s.category = std::move(label);
  return s;
}

EstimandSpec EstimandSpec::bias_in_group(std::string label) {
  EstimandSpec s;
  s.kind = EstimandKind::bias_by_group;
  s.group = std::move(label);
  return s;
}

EstimandSpec EstimandSpec::forecaster_risk(LossKind loss) {
  EstimandSpec s;
  s.kind = EstimandKind::risk_forecasters;
  s.loss = loss;
  return s;
}

EstimandSpec EstimandSpec::model_risk(std::string model_id, LossKind loss) {
  EstimandSpec s;
  s.kind = EstimandKind::risk_model;
  s.loss = loss;
  s.model = std::move(model_id);
  return s;
}

EstimandSpec EstimandSpec::oracle_risk(LossKind loss) {
  EstimandSpec s;
  s.kind = EstimandKind::risk_oracle;
  s.loss = loss;
  return s;
}

EstimandSpec EstimandSpec::comparative(std::string model_id, LossKind loss) {
  EstimandSpec s;
  s.kind = EstimandKind::comparative_risk;
  s.loss = loss;
  s.model = std::move(model_id);
  return s;
}

bool EstimandSpec::is_bias() const {
  switch (kind) {
    case EstimandKind::bias_overall:
    case EstimandKind::bias_per_treatment:
    case EstimandKind::bias_difference:
    case EstimandKind::bias_by_category:
    case EstimandKind::bias_by_group:
      return true;
    default:
      return false;
  }
}

std::string EstimandSpec::label() const {
  switch (kind) {
    case EstimandKind::bias_overall: return "bias";
    case EstimandKind::bias_per_treatment: return "bias:treatment:" + treatment;
    case EstimandKind::bias_difference: return "bias:difference:" + treatment + "-" + other_treatment;
    case EstimandKind::bias_by_category: return "bias:category:" + category;
    case EstimandKind::bias_by_group: return "bias:group:" + group;
    case EstimandKind::risk_forecasters: return "risk:forecasters";
    case EstimandKind::risk_model: return "risk:" + model;
    case EstimandKind::risk_oracle: return "risk:oracle";
    case EstimandKind::comparative_risk: return "comparative_risk:" + model;
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// A spec resolved against a concrete forecast matrix.
struct Plan {
  EstimandKind kind = EstimandKind::bias_overall;
  LossKind loss = LossKind::squared_error;
  Eigen::Index k = -1;
  Eigen::Index l = -1;
  std::vector<Eigen::Index> rows;       // empty: all treatments
  std::vector<double> signs;            // parallel to rows (category bias)
  std::vector<char> columns;            // empty: all forecasters
  const ModelPredictions* model = nullptr;
  std::uint64_t model_stream = 0;
  Eigen::VectorXd oracle;
};

Eigen::Index treatment_index(const ForecastMatrix& fm, const std::string& id) {
  const auto& ids = fm.treatment_ids();
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw DomainError("unknown treatment '" + id + "'");
  return static_cast<Eigen::Index>(it - ids.begin());
}

void require_probabilities(const ForecastMatrix& fm) {
  const auto& x = fm.predictions();
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      if (fm.is_observed(k, f) && !(x(k, f) >= 0.0 && x(k, f) <= 1.0)) {
        throw DomainError("brier loss needs probability forecasts in [0, 1]; forecaster '" +
                          fm.forecaster_ids()[f] + "' predicted " + std::to_string(x(k, f)) +
                          " for '" + fm.treatment_ids()[k] + "'");
      }
    }
  }
}

const ModelPredictions& resolve_model(const ModelSet& models, const std::string& id,
                                      Eigen::Index k) {
  auto it = models.find(id);
  if (it == models.end()) throw DomainError("estimand refers to unknown model '" + id + "'");
  const ModelPredictions& m = it->second;
  if (m.point.size() != k) {
    throw DomainError("model '" + id + "' predicts " + std::to_string(m.point.size()) +
                      " treatments, expected " + std::to_string(k));
  }
  if (m.stochastic() && m.draws.cols() != k) {
    throw DomainError("model '" + id + "' draws have the wrong number of columns");
  }
  return m;
}

Plan compile(const ForecastMatrix& fm, const PosteriorSampler& sampler, const EstimandSpec& spec,
             const ModelSet& models, const InferenceOptions& options) {
  const Eigen::Index k = fm.treatments();
  Plan plan;
  plan.kind = spec.kind;
  plan.loss = spec.loss;
  switch (spec.kind) {
    case EstimandKind::bias_overall:
      break;
    case EstimandKind::bias_per_treatment:
      plan.rows = {treatment_index(fm, spec.treatment)};
      plan.signs = {1.0};
      break;
    case EstimandKind::bias_difference: {
      plan.k = treatment_index(fm, spec.treatment);
      plan.l = treatment_index(fm, spec.other_treatment);
      if (plan.k == plan.l) throw DomainError("bias difference needs two distinct treatments");
      if (!(fm.observed().row(plan.k).array() && fm.observed().row(plan.l).array()).any()) {
        throw DomainError("no forecaster predicted both '" + spec.treatment + "' and '" +
                          spec.other_treatment + "'");
      }
      break;
    }
    case EstimandKind::bias_by_category: {
      if (!fm.categories()) throw DomainError("category bias needs treatment categories");
      const auto& cats = *fm.categories();
      if (!cats.kinds.count(spec.category)) {
        throw DomainError("unknown category '" + spec.category + "'");
      }
      for (const auto& [id, cat] : cats.by_treatment) {
        if (cat.label != spec.category) continue;
        const Eigen::Index idx = treatment_index(fm, id);
        plan.rows.push_back(idx);
        plan.signs.push_back(static_cast<double>(cat.sign));
      }
      if (cats.kind_of(spec.category) == CategoryKind::difference) {
        if (plan.rows.size() != 2 || plan.signs[0] == plan.signs[1]) {
          throw DomainError("difference category '" + spec.category +
                            "' needs exactly one (k, l) pair");
        }
        plan.kind = EstimandKind::bias_difference;
        plan.k = plan.signs[0] > 0 ? plan.rows[0] : plan.rows[1];
        plan.l = plan.signs[0] > 0 ? plan.rows[1] : plan.rows[0];
        if (!(fm.observed().row(plan.k).array() && fm.observed().row(plan.l).array()).any()) {
          throw DomainError("no forecaster predicted both members of '" + spec.category + "'");
        }
      }
      break;
    }
    case EstimandKind::bias_by_group: {
      plan.columns.assign(static_cast<std::size_t>(fm.forecasters()), 0);
      bool any = false;
      for (Eigen::Index f = 0; f < fm.forecasters(); ++f) {
        auto it = fm.forecaster_groups().find(fm.forecaster_ids()[f]);
        if (it != fm.forecaster_groups().end() && it->second == spec.group) {
          plan.columns[f] = 1;
          any = any || fm.observed().col(f).any();
        }
      }
      if (!any) throw DomainError("group '" + spec.group + "' has no observed predictions");
      break;
    }
    case EstimandKind::risk_forecasters:
      break;
    case EstimandKind::risk_model:
    case EstimandKind::comparative_risk:
      plan.model = &resolve_model(models, spec.model, k);
      plan.model_stream = mix_seed(options.seed ^ fnv1a(spec.model));
      if (spec.loss == LossKind::brier) {
        const auto check = [&](const auto& values) {
          if ((values.array() < 0.0).any() || (values.array() > 1.0).any()) {
            throw DomainError("brier loss needs model '" + spec.model +
                              "' to predict probabilities in [0, 1]");
          }
        };
        check(plan.model->point);
        if (plan.model->stochastic()) check(plan.model->draws);
      }
      break;
    case EstimandKind::risk_oracle:
      plan.oracle = oracle_predictions(sampler, spec.loss);
      break;
  }
  if (spec.loss == LossKind::brier &&
      (spec.kind == EstimandKind::risk_forecasters || spec.kind == EstimandKind::comparative_risk)) {
    require_probabilities(fm);
  }
  return plan;
}

// sum_{k,f observed} w_k m_f g(k, f) / sum_{k,f observed} w_k m_f over the
// plan's treatment rows and forecaster columns.
template <typename CellFn>
double weighted_cells(const ForecastMatrix& fm, const Plan& plan, const Eigen::VectorXd& w,
                      const Eigen::VectorXd& m, CellFn&& cell) {
  const auto& observed = fm.observed();
  const Eigen::Index nf = fm.forecasters();
  double num = 0.0;
  double den = 0.0;
  const auto visit_row = [&](Eigen::Index k, double sign) {
    double row_num = 0.0;
    double row_den = 0.0;
    for (Eigen::Index f = 0; f < nf; ++f) {
      if (!observed(k, f)) continue;
      if (!plan.columns.empty() && !plan.columns[f]) continue;
      row_num += m[f] * cell(k, f);
      row_den += m[f];
    }
    num += w[k] * sign * row_num;
    den += w[k] * row_den;
  };
  if (plan.rows.empty()) {
    for (Eigen::Index k = 0; k < fm.treatments(); ++k) visit_row(k, 1.0);
  } else {
    for (std::size_t i = 0; i < plan.rows.size(); ++i) visit_row(plan.rows[i], plan.signs[i]);
  }
  if (!(den > 0.0)) throw DomainError("estimand has no observed forecasts after masking");
  return num / den;
}

const double* model_values(const Plan& plan, std::uint64_t draw_index,
                           Eigen::VectorXd& scratch) {
  if (!plan.model->stochastic()) return plan.model->point.data();
  Rng pick = Rng::substream(plan.model_stream, draw_index);
  scratch = plan.model->draws.row(static_cast<Eigen::Index>(
                                      pick.index(static_cast<std::size_t>(plan.model->draws.rows()))))
                .transpose();
  return scratch.data();
}

double evaluate(const ForecastMatrix& fm, const Plan& plan, const Eigen::VectorXd& mu,
                const Eigen::VectorXd& w, const Eigen::VectorXd& m, std::uint64_t draw_index,
                Eigen::VectorXd& scratch) {
  const auto& x = fm.predictions();
  switch (plan.kind) {
    case EstimandKind::bias_overall:
    case EstimandKind::bias_per_treatment:
    case EstimandKind::bias_by_category:
    case EstimandKind::bias_by_group:
      return weighted_cells(fm, plan, w, m,
                            [&](Eigen::Index k, Eigen::Index f) { return x(k, f) - mu[k]; });
    case EstimandKind::bias_difference: {
      const double truth = mu[plan.k] - mu[plan.l];
      double num = 0.0;
      double den = 0.0;
      for (Eigen::Index f = 0; f < fm.forecasters(); ++f) {
        if (!fm.is_observed(plan.k, f) || !fm.is_observed(plan.l, f)) continue;
        num += m[f] * ((x(plan.k, f) - x(plan.l, f)) - truth);
        den += m[f];
      }
      return num / den;
    }
    case EstimandKind::risk_forecasters:
      return weighted_cells(fm, plan, w, m, [&](Eigen::Index k, Eigen::Index f) {
        return loss(plan.loss, mu[k], x(k, f));
      });
    case EstimandKind::comparative_risk: {
      const double* model = model_values(plan, draw_index, scratch);
      return weighted_cells(fm, plan, w, m, [&](Eigen::Index k, Eigen::Index f) {
        return loss(plan.loss, mu[k], x(k, f)) - loss(plan.loss, mu[k], model[k]);
      });
    }
    case EstimandKind::risk_model: {
      const double* model = model_values(plan, draw_index, scratch);
      double acc = 0.0;
      for (Eigen::Index k = 0; k < mu.size(); ++k) acc += w[k] * loss(plan.loss, mu[k], model[k]);
      return acc;
    }
    case EstimandKind::risk_oracle: {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < mu.size(); ++k) {
        acc += w[k] * loss(plan.loss, mu[k], plan.oracle[k]);
      }
      return acc;
    }
  }
  return 0.0;
}

template <typename Body>
void parallel_for(Eigen::Index count, unsigned requested, Body&& body) {
  unsigned threads = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Eigen::Index>(threads, std::max<Eigen::Index>(count, 1)));
  if (threads <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> workers;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const Eigen::Index chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const Eigen::Index begin = t * chunk;
    const Eigen::Index end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

Eigen::MatrixXd draw_estimands(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                               const std::vector<EstimandSpec>& specs, const ModelSet& models,
                               const InferenceOptions& options) {
  if (options.samples < kMinSamples) {
    throw DomainError("need at least " + std::to_string(kMinSamples) + " Monte Carlo samples, got " +
                      std::to_string(options.samples));
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw DomainError("interval level must lie in (0, 1)");
  }
  if (sampler.dimension() != forecasts.treatments()) {
    throw DomainError("posterior dimension " + std::to_string(sampler.dimension()) +
                      " does not match " + std::to_string(forecasts.treatments()) + " treatments");
  }
  std::vector<Plan> plans;
  plans.reserve(specs.size());
  for (const auto& spec : specs) plans.push_back(compile(forecasts, sampler, spec, models, options));

  const Eigen::Index k = forecasts.treatments();
  const Eigen::Index f = forecasts.forecasters();
  const auto j_count = static_cast<Eigen::Index>(plans.size());
  Eigen::MatrixXd out(options.samples, j_count);
  parallel_for(options.samples, options.threads, [&](Eigen::Index begin, Eigen::Index end) {
    Eigen::VectorXd mu(k);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    Eigen::VectorXd m = Eigen::VectorXd::Constant(f, 1.0 / static_cast<double>(f));
    Eigen::VectorXd scratch;
    for (Eigen::Index s = begin; s < end; ++s) {
      const auto index = static_cast<std::uint64_t>(s);
      Rng rng = Rng::substream(options.seed, index);
      sampler.draw(rng, mu);
      if (options.weighting == Weighting::dirichlet) {
        w = rng.flat_dirichlet(k);
        m = rng.flat_dirichlet(f);
      }
      for (Eigen::Index j = 0; j < j_count; ++j) {
        out(s, j) = evaluate(forecasts, plans[static_cast<std::size_t>(j)], mu, w, m, index, scratch);
      }
    }
  });
  return out;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

EstimateSummary summarize(const Eigen::Ref<const Eigen::VectorXd>& draws, const std::string& label,
                          LossKind loss, const InferenceOptions& options) {
  const Eigen::Index n = draws.size();
  EstimateSummary out;
  out.estimand = label;
  out.loss = loss;
  out.n_samples = n;
  out.seed = options.seed;
  std::vector<double> sorted(draws.data(), draws.data() + n);
  std::sort(sorted.begin(), sorted.end());
  out.mean = draws.mean();
  const double tail = (1.0 - options.level) / 2.0;
  out.ci_lower = sorted_quantile(sorted, tail);
  out.ci_upper = sorted_quantile(sorted, 1.0 - tail);
  Eigen::Index neg = 0;
  Eigen::Index pos = 0;
  for (double v : sorted) {
    if (v < 0.0) ++neg;
    if (v > 0.0) ++pos;
  }
  const auto dn = static_cast<double>(n);
  out.pr_negative = static_cast<double>(neg) / dn;
  out.pr_positive = static_cast<double>(pos) / dn;
  out.pr_zero = static_cast<double>(n - neg - pos) / dn;
  const double pr_le = static_cast<double>(n - pos) / dn;
  const double pr_ge = static_cast<double>(n - neg) / dn;
  out.p_value = std::min(1.0, 2.0 * std::min(pr_le, pr_ge));
  const double var = n > 1 ? (draws.array() - out.mean).square().sum() / (dn - 1.0) : 0.0;
  out.mc_standard_error = std::sqrt(var / dn);
  return out;
}

std::vector<EstimateSummary> estimate_all(const ForecastMatrix& forecasts,
                                          const PosteriorSampler& sampler,
                                          const std::vector<EstimandSpec>& specs,
                                          const ModelSet& models, const InferenceOptions& options) {
  const Eigen::MatrixXd draws = draw_estimands(forecasts, sampler, specs, models, options);
  std::vector<EstimateSummary> out;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    out.push_back(summarize(draws.col(static_cast<Eigen::Index>(j)), specs[j].label(),
                            specs[j].loss, options));
  }
  return out;
}

EstimateSummary estimate(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                         const EstimandSpec& spec, const ModelSet& models,
                         const InferenceOptions& options) {
  return estimate_all(forecasts, sampler, {spec}, models, options).front();
}

// ---------------------------------------------------------------------------
// Simultaneous inference

std::vector<SimultaneousBand> simultaneous_bands(const Eigen::MatrixXd& draws, double level) {
  const Eigen::Index n = draws.rows();
  const Eigen::Index j_count = draws.cols();
  if (n < 2) throw DomainError("simultaneous bands need at least two draws");
  const double tail = (1.0 - level) / 2.0;
  std::vector<SimultaneousBand> bands(static_cast<std::size_t>(j_count));
  Eigen::MatrixXd t(n, j_count);
  std::vector<double> buf(static_cast<std::size_t>(n));
  std::vector<double> critical(static_cast<std::size_t>(j_count), 0.0);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    auto& band = bands[static_cast<std::size_t>(j)];
    const auto col = draws.col(j);
    band.mean = col.mean();
    const double sd = std::sqrt((col.array() - band.mean).square().sum() / static_cast<double>(n - 1));
    for (Eigen::Index s = 0; s < n; ++s) buf[s] = col[s];
    std::sort(buf.begin(), buf.end());
    band.marginal_lower = sorted_quantile(buf, tail);
    band.marginal_upper = sorted_quantile(buf, 1.0 - tail);
    if (sd > 0.0) {
      t.col(j) = (col.array() - band.mean).abs() / sd;
    } else {
      t.col(j).setZero();
    }
    for (Eigen::Index s = 0; s < n; ++s) buf[s] = t(s, j);
    std::sort(buf.begin(), buf.end());
    critical[static_cast<std::size_t>(j)] = sorted_quantile(buf, level);
  }
  for (Eigen::Index s = 0; s < n; ++s) buf[s] = j_count ? t.row(s).maxCoeff() : 0.0;
  std::sort(buf.begin(), buf.end());
  const double q = sorted_quantile(buf, level);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    auto& band = bands[static_cast<std::size_t>(j)];
    const double c = critical[static_cast<std::size_t>(j)];
    const double stretch = c > 0.0 ? std::max(1.0, q / c) : 1.0;
    band.critical_value = q;
    band.lower = std::min(band.marginal_lower,
                          band.mean - std::max(0.0, band.mean - band.marginal_lower) * stretch);
    band.upper = std::max(band.marginal_upper,
                          band.mean + std::max(0.0, band.marginal_upper - band.mean) * stretch);
    band.significant = band.lower > 0.0 || band.upper < 0.0;
  }
  return bands;
}

namespace {

SimultaneousInference joint(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                            const std::vector<EstimandSpec>& specs, const InferenceOptions& options) {
  const Eigen::MatrixXd draws = draw_estimands(forecasts, sampler, specs, {}, options);
  SimultaneousInference out;
  for (std::size_t j = 0; j < specs.size(); ++j) {
    out.labels.push_back(specs[j].label());
    out.estimates.push_back(
        summarize(draws.col(static_cast<Eigen::Index>(j)), specs[j].label(), specs[j].loss, options));
  }
  out.bands = simultaneous_bands(draws, options.level);
  return out;
}

}  // namespace

SimultaneousInference per_treatment_bias_simultaneous(const ForecastMatrix& forecasts,
                                                      const PosteriorSampler& sampler,
                                                      const InferenceOptions& options) {
  if (forecasts.treatments() < 2) {
    throw DomainError("simultaneous per-treatment bias needs K >= 2 treatments");
  }
  std::vector<EstimandSpec> specs;
  for (const auto& id : forecasts.treatment_ids()) specs.push_back(EstimandSpec::bias_for(id));
  return joint(forecasts, sampler, specs, options);
}

SimultaneousInference subgroup_bias(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                                    const InferenceOptions& options) {
  std::set<std::string> labels;
  for (const auto& [forecaster, group] : forecasts.forecaster_groups()) labels.insert(group);
  if (labels.size() < 2) {
    throw DomainError("subgroup bias needs at least two forecaster groups, found " +
                      std::to_string(labels.size()));
  }
  const std::vector<std::string> groups(labels.begin(), labels.end());
  std::vector<EstimandSpec> specs;
  for (const auto& g : groups) specs.push_back(EstimandSpec::bias_in_group(g));
  const Eigen::MatrixXd group_draws = draw_estimands(forecasts, sampler, specs, {}, options);

  const auto g_count = static_cast<Eigen::Index>(groups.size());
  const Eigen::Index pairs = g_count * (g_count - 1) / 2;
  Eigen::MatrixXd all(group_draws.rows(), g_count + pairs);
  all.leftCols(g_count) = group_draws;
  SimultaneousInference out;
  for (const auto& spec : specs) out.labels.push_back(spec.label());
  Eigen::Index col = g_count;
  for (Eigen::Index a = 0; a < g_count; ++a) {
    for (Eigen::Index b = a + 1; b < g_count; ++b) {
      all.col(col++) = group_draws.col(a) - group_draws.col(b);
      out.labels.push_back("bias:group_difference:" + groups[static_cast<std::size_t>(a)] + "-" +
                           groups[static_cast<std::size_t>(b)]);
    }
  }
  for (Eigen::Index j = 0; j < all.cols(); ++j) {
    out.estimates.push_back(
        summarize(all.col(j), out.labels[static_cast<std::size_t>(j)], LossKind::squared_error, options));
  }
  out.bands = simultaneous_bands(all, options.level);
  return out;
}

SimultaneousInference category_bias(const ForecastMatrix& forecasts, const PosteriorSampler& sampler,
                                    const InferenceOptions& options) {
  if (!forecasts.categories()) throw DomainError("category bias needs treatment categories");
  std::vector<EstimandSpec> specs;
  for (const auto& label : forecasts.categories()->labels()) {
    specs.push_back(EstimandSpec::bias_in_category(label));
  }
  if (specs.empty()) throw DomainError("no treatment categories declared");
  return joint(forecasts, sampler, specs, options);
}

}  // namespace feval
