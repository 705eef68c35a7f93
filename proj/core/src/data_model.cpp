#include "feval/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <unordered_map>

#include <Eigen/Cholesky>

#include "feval/csv.hpp"
#include "feval/errors.hpp"
#include "feval/normal.hpp"

namespace feval {

namespace {

constexpr double kSymmetryTolerance = 1e-8;

void require_unique(const std::vector<std::string>& ids, const std::string& what) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) throw ValidationError(what + " id is empty", i + 1);
    if (!seen.insert(ids[i]).second) {
      throw ValidationError("duplicate " + what + " id '" + ids[i] + "'", i + 1);
    }
  }
}

// Cholesky of cov + jitter * I for a short ladder of jitters; succeeds for
// any PSD matrix up to rounding.
bool cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  const Eigen::Index k = cov.rows();
  const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  for (double jitter : {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov + jitter * scale * Eigen::MatrixXd::Identity(k, k));
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

std::string join(const std::set<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

void check_alignment(const std::vector<std::string>& expected, const std::vector<std::string>& got,
                     const std::string& what, std::optional<std::size_t> row = std::nullopt) {
  std::set<std::string> a(expected.begin(), expected.end());
  std::set<std::string> b(got.begin(), got.end());
  if (a == b) return;
  std::set<std::string> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                std::inserter(diff, diff.end()));
  throw ValidationError(what + " ids are misaligned; symmetric difference: {" + join(diff) + "}",
                        row);
}

struct LongFormat {
  std::string row_column;
  std::string value_column;
  bool allow_group = false;
  bool probability = false;  // values must lie in [0, 1]
};

// Long-format forecasts `<row>,forecaster_id,<value>[,group]` laid out
// against `row_order`.
ForecastMatrix read_long_forecasts(const std::filesystem::path& path,
                                   const std::vector<std::string>& row_order,
                                   const LongFormat& format) {
  const csv::Table table = csv::read(path);
  const std::size_t c_row = table.require_column(format.row_column);
  const std::size_t c_forecaster = table.require_column("forecaster_id");
  const std::size_t c_value = table.require_column(format.value_column);
  const auto c_group = format.allow_group ? table.find_column("group") : std::nullopt;

  std::vector<std::string> row_ids_seen;
  std::vector<std::string> forecaster_ids;
  std::unordered_map<std::string, Eigen::Index> forecaster_index;
  std::map<std::string, std::string> groups;
  struct Cell {
    std::string row;
    Eigen::Index forecaster;
    double value;
  };
  std::vector<Cell> cells;
  cells.reserve(table.row_count());
  std::set<std::string> row_set;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const std::string& row_id = table.text(r, c_row);
    const std::string& forecaster = table.text(r, c_forecaster);
    const double value = table.number(r, c_value);
    if (format.probability && !(value >= 0.0 && value <= 1.0)) {
      throw ValidationError(table.source() + ": probability outside [0, 1]", r + 1,
                            format.value_column);
    }
    auto [it, inserted] =
        forecaster_index.emplace(forecaster, static_cast<Eigen::Index>(forecaster_ids.size()));
    if (inserted) forecaster_ids.push_back(forecaster);
    if (c_group) {
      const std::string& group = table.text(r, *c_group);
      auto [git, fresh] = groups.emplace(forecaster, group);
      if (!fresh && git->second != group) {
        throw ValidationError(table.source() + ": forecaster '" + forecaster +
                                  "' assigned to groups '" + git->second + "' and '" + group + "'",
                              r + 1, "group");
      }
    }
    if (row_set.insert(row_id).second) row_ids_seen.push_back(row_id);
    cells.push_back({row_id, it->second, value});
  }
  // Point at a concrete row: the first forecast naming an unknown id, or
  // else the position of the first id nobody forecast.
  std::optional<std::size_t> bad_row;
  const std::set<std::string> known(row_order.begin(), row_order.end());
  for (std::size_t r = 0; r < cells.size() && !bad_row; ++r) {
    if (!known.count(cells[r].row)) bad_row = r + 1;
  }
  for (std::size_t i = 0; i < row_order.size() && !bad_row; ++i) {
    if (!row_set.count(row_order[i])) bad_row = i + 1;
  }
  check_alignment(row_order, row_ids_seen, table.source() + ": " + format.row_column, bad_row);

  std::unordered_map<std::string, Eigen::Index> row_index;
  for (std::size_t i = 0; i < row_order.size(); ++i) row_index[row_order[i]] = i;
  const auto k = static_cast<Eigen::Index>(row_order.size());
  const auto f = static_cast<Eigen::Index>(forecaster_ids.size());
  Eigen::MatrixXd predictions = Eigen::MatrixXd::Constant(k, f, std::nan(""));
  BoolMatrix observed = BoolMatrix::Constant(k, f, false);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const Eigen::Index i = row_index.at(cells[r].row);
    const Eigen::Index j = cells[r].forecaster;
    if (observed(i, j)) {
      throw ValidationError(table.source() + ": duplicate forecast for (" + cells[r].row + ", " +
                                forecaster_ids[j] + ")",
                            r + 1);
    }
    observed(i, j) = true;
    predictions(i, j) = cells[r].value;
  }
  return ForecastMatrix(row_order, std::move(forecaster_ids), std::move(predictions),
                        std::move(observed), std::move(groups));
}

}  // namespace

// ---------------------------------------------------------------------------
// EffectEstimates

EffectEstimates::EffectEstimates(std::vector<std::string> treatment_ids, Eigen::VectorXd estimates,
                                 Eigen::MatrixXd covariance)
    : ids_(std::move(treatment_ids)),
      estimates_(std::move(estimates)),
      covariance_(std::move(covariance)) {
  const auto k = static_cast<Eigen::Index>(ids_.size());
  if (k == 0) throw ValidationError("effect estimates are empty");
  if (estimates_.size() != k || covariance_.rows() != k || covariance_.cols() != k) {
    throw ValidationError("effect estimates: " + std::to_string(k) + " ids, " +
                          std::to_string(estimates_.size()) + " estimates, covariance " +
                          std::to_string(covariance_.rows()) + "x" +
                          std::to_string(covariance_.cols()));
  }
  require_unique(ids_, "treatment");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(estimates_[i])) {
      throw ValidationError("non-finite estimate", i + 1, "estimate");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!std::isfinite(covariance_(i, j))) {
        throw ValidationError("non-finite covariance entry", i + 1, ids_[j]);
      }
      if (std::abs(covariance_(i, j) - covariance_(j, i)) > kSymmetryTolerance) {
        throw ValidationError("covariance is not symmetric", i + 1, ids_[j]);
      }
    }
    if (covariance_(i, i) < 0.0) {
      throw ValidationError("negative variance; covariance is not positive semi-definite", i + 1,
                            "variance");
    }
  }
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  Eigen::MatrixXd off = covariance_;
  off.diagonal().setZero();
  diagonal_ = (off.array() == 0.0).all();
  // a diagonal matrix with non-negative entries is PSD already
  if (!diagonal_ && !cholesky_with_jitter(covariance_)) {
    throw ValidationError("covariance is not positive semi-definite");
  }
}

EffectEstimates EffectEstimates::from_variances(std::vector<std::string> treatment_ids,
                                                Eigen::VectorXd estimates,
                                                const Eigen::VectorXd& variances) {
  for (Eigen::Index i = 0; i < variances.size(); ++i) {
    if (!(variances[i] >= 0.0)) {
      throw ValidationError("negative variance; covariance is not positive semi-definite", i + 1,
                            "variance");
    }
  }
  Eigen::MatrixXd cov = variances.asDiagonal();
  return EffectEstimates(std::move(treatment_ids), std::move(estimates), std::move(cov));
}

Eigen::VectorXd EffectEstimates::standard_errors() const {
  return covariance_.diagonal().cwiseSqrt();
}

std::optional<Eigen::Index> EffectEstimates::index_of(const std::string& treatment_id) const {
  auto it = std::find(ids_.begin(), ids_.end(), treatment_id);
  if (it == ids_.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - ids_.begin());
}

// ---------------------------------------------------------------------------
// Categories and forecasts

std::vector<std::string> TreatmentCategories::labels() const {
  std::vector<std::string> out;
  for (const auto& [label, kind] : kinds) out.push_back(label);
  return out;
}

CategoryKind TreatmentCategories::kind_of(const std::string& label) const {
  auto it = kinds.find(label);
  return it == kinds.end() ? CategoryKind::level : it->second;
}

ForecastMatrix::ForecastMatrix(std::vector<std::string> treatment_ids,
                               std::vector<std::string> forecaster_ids,
                               Eigen::MatrixXd predictions, BoolMatrix observed,
                               std::map<std::string, std::string> forecaster_groups,
                               std::optional<TreatmentCategories> categories)
    : treatment_ids_(std::move(treatment_ids)),
      forecaster_ids_(std::move(forecaster_ids)),
      predictions_(std::move(predictions)),
      observed_(std::move(observed)),
      groups_(std::move(forecaster_groups)),
      categories_(std::move(categories)) {
  validate();
  for (Eigen::Index k = 0; k < predictions_.rows(); ++k) {
    for (Eigen::Index f = 0; f < predictions_.cols(); ++f) {
      if (!observed_(k, f)) predictions_(k, f) = std::nan("");
    }
  }
}

ForecastMatrix ForecastMatrix::dense(std::vector<std::string> treatment_ids,
                                     std::vector<std::string> forecaster_ids,
                                     Eigen::MatrixXd predictions) {
  BoolMatrix observed = BoolMatrix::Constant(predictions.rows(), predictions.cols(), true);
  return ForecastMatrix(std::move(treatment_ids), std::move(forecaster_ids),
                        std::move(predictions), std::move(observed));
}

void ForecastMatrix::validate() const {
  const auto k = static_cast<Eigen::Index>(treatment_ids_.size());
  const auto f = static_cast<Eigen::Index>(forecaster_ids_.size());
  if (k == 0 || f == 0) throw ValidationError("forecast matrix is empty");
  if (predictions_.rows() != k || predictions_.cols() != f || observed_.rows() != k ||
      observed_.cols() != f) {
    throw ValidationError("forecast matrix shape does not match its id lists");
  }
  require_unique(treatment_ids_, "treatment");
  require_unique(forecaster_ids_, "forecaster");
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) {
      if (observed_(i, j) && !std::isfinite(predictions_(i, j))) {
        throw ValidationError("non-finite prediction by forecaster '" + forecaster_ids_[j] + "'",
                              i + 1, "prediction");
      }
    }
    if (!observed_.row(i).any()) {
      throw ValidationError("treatment '" + treatment_ids_[i] + "' has no forecasts", i + 1);
    }
  }
  for (Eigen::Index j = 0; j < f; ++j) {
    if (!observed_.col(j).any()) {
      throw ValidationError("forecaster '" + forecaster_ids_[j] + "' made no forecasts");
    }
  }
  for (const auto& [forecaster, group] : groups_) {
    if (std::find(forecaster_ids_.begin(), forecaster_ids_.end(), forecaster) ==
        forecaster_ids_.end()) {
      throw ValidationError("group assigned to unknown forecaster '" + forecaster + "'");
    }
    if (group.empty()) throw ValidationError("empty group label for '" + forecaster + "'");
  }
  if (categories_) {
    std::map<std::string, std::vector<int>> signs_by_label;
    for (const auto& [treatment, cat] : categories_->by_treatment) {
      if (std::find(treatment_ids_.begin(), treatment_ids_.end(), treatment) ==
          treatment_ids_.end()) {
        throw ValidationError("category assigned to unknown treatment '" + treatment + "'");
      }
      if (cat.sign != 1 && cat.sign != -1) {
        throw ValidationError("category sign must be +1 or -1 for '" + treatment + "'");
      }
      signs_by_label[cat.label].push_back(cat.sign);
    }
    for (const auto& [label, kind] : categories_->kinds) {
      const auto it = signs_by_label.find(label);
      if (it == signs_by_label.end()) {
        throw ValidationError("category '" + label + "' has no treatments");
      }
      if (kind == CategoryKind::difference) {
        const auto& s = it->second;
        if (s.size() != 2 || std::count(s.begin(), s.end(), 1) != 1) {
          throw ValidationError("difference category '" + label +
                                "' needs exactly one (k, l) pair: one +1 and one -1 member");
        }
      }
    }
    for (const auto& [label, signs] : signs_by_label) {
      if (!categories_->kinds.count(label)) {
        throw ValidationError("category '" + label + "' has no declared kind");
      }
    }
  }
}

ForecastMatrix ForecastMatrix::with_groups(std::map<std::string, std::string> groups) const {
  return ForecastMatrix(treatment_ids_, forecaster_ids_, predictions_, observed_,
                        std::move(groups), categories_);
}

ForecastMatrix ForecastMatrix::with_categories(TreatmentCategories categories) const {
  return ForecastMatrix(treatment_ids_, forecaster_ids_, predictions_, observed_, groups_,
                        std::move(categories));
}

ForecastMatrix ForecastMatrix::shifted(double offset) const {
  Eigen::MatrixXd moved = predictions_.array() + offset;
  return ForecastMatrix(treatment_ids_, forecaster_ids_, std::move(moved), observed_, groups_,
                        categories_);
}

// ---------------------------------------------------------------------------
// Replication data

ReplicationDataset::ReplicationDataset(std::vector<std::string> study_ids,
                                       Eigen::VectorXd original_effect,
                                       Eigen::VectorXi replication_n,
                                       Eigen::VectorXd replication_p,
                                       Eigen::VectorXi replication_direction,
                                       Eigen::VectorXd alpha, ForecastMatrix forecaster_probs)
    : ids_(std::move(study_ids)),
      original_effect_(std::move(original_effect)),
      n_(std::move(replication_n)),
      p_(std::move(replication_p)),
      direction_(std::move(replication_direction)),
      alpha_(std::move(alpha)),
      forecasts_(std::move(forecaster_probs)) {
  const auto k = static_cast<Eigen::Index>(ids_.size());
  if (k == 0) throw ValidationError("replication dataset is empty");
  if (original_effect_.size() != k || n_.size() != k || p_.size() != k ||
      direction_.size() != k || alpha_.size() != k) {
    throw ValidationError("replication dataset columns have different lengths");
  }
  require_unique(ids_, "study");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(original_effect_[i])) {
      throw ValidationError("non-finite original effect", i + 1, "original_effect");
    }
    if (n_[i] < 2) throw ValidationError("replication_n must be >= 2", i + 1, "replication_n");
    if (!(p_[i] > 0.0 && p_[i] <= 1.0)) {
      throw ValidationError("replication_p must lie in (0, 1]", i + 1, "replication_p");
    }
    if (direction_[i] != 1 && direction_[i] != -1) {
      throw ValidationError("replication_direction must be +1 or -1", i + 1,
                            "replication_direction");
    }
    if (!(alpha_[i] > 0.0 && alpha_[i] < 1.0)) {
      throw ValidationError("alpha must lie in (0, 1)", i + 1, "alpha");
    }
  }
  if (forecasts_.treatment_ids() != ids_) {
    check_alignment(ids_, forecasts_.treatment_ids(), "replication forecast study");
    throw ValidationError("replication forecasts are not ordered like the studies");
  }
  const auto& probs = forecasts_.predictions();
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      if (forecasts_.is_observed(i, j) && !(probs(i, j) >= 0.0 && probs(i, j) <= 1.0)) {
        throw ValidationError("forecast probability outside [0, 1] by forecaster '" +
                                  forecasts_.forecaster_ids()[j] + "'",
                              i + 1, "probability");
      }
    }
  }
}

Eigen::VectorXd backout_replication_effect(const ReplicationDataset& dataset) {
  const Eigen::Index k = dataset.size();
  Eigen::VectorXd y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // Phi^{-1}(1 - p/2) == -Phi^{-1}(p/2); the latter keeps precision for tiny p.
    const double z = -normal_quantile(dataset.replication_p()[i] / 2.0);
    y[i] = dataset.replication_direction()[i] * z /
           std::sqrt(static_cast<double>(dataset.replication_n()[i]));
  }
  return y;
}

EffectEstimates replication_effect_estimates(const ReplicationDataset& dataset) {
  Eigen::VectorXd variances = dataset.replication_n().cast<double>().cwiseInverse();
  return EffectEstimates::from_variances(dataset.study_ids(), backout_replication_effect(dataset),
                                         variances);
}

// ---------------------------------------------------------------------------
// Loaders

namespace {

TreatmentCategories read_categories(const std::filesystem::path& path,
                                    const std::vector<std::string>* known_treatments) {
  const csv::Table table = csv::read(path);
  std::set<std::string> known;
  if (known_treatments) known.insert(known_treatments->begin(), known_treatments->end());
  const std::size_t c_id = table.require_column("treatment_id");
  const std::size_t c_cat = table.require_column("category");
  const std::size_t c_sign = table.require_column("sign");
  const auto c_kind = table.find_column("kind");
  TreatmentCategories out;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    const std::string& id = table.text(r, c_id);
    const std::string& label = table.text(r, c_cat);
    if (known_treatments && !known.count(id)) {
      throw ValidationError(table.source() + ": unknown treatment '" + id + "'", r + 1,
                            "treatment_id");
    }
    const long long sign = table.integer(r, c_sign);
    if (sign != 1 && sign != -1) {
      throw ValidationError(table.source() + ": sign must be +1 or -1", r + 1, "sign");
    }
    CategoryKind kind = CategoryKind::level;
    if (c_kind) {
      const std::string& k = table.text(r, *c_kind);
      if (k == "difference") {
        kind = CategoryKind::difference;
      } else if (k != "level") {
        throw ValidationError(table.source() + ": kind must be 'level' or 'difference'", r + 1,
                              "kind");
      }
    }
    auto [kit, fresh_kind] = out.kinds.emplace(label, kind);
    if (!fresh_kind && kit->second != kind) {
      throw ValidationError(table.source() + ": category '" + label + "' declared with two kinds",
                            r + 1, "kind");
    }
    if (!out.by_treatment.emplace(id, TreatmentCategory{label, static_cast<int>(sign)}).second) {
      throw ValidationError(table.source() + ": treatment '" + id + "' listed twice", r + 1,
                            "treatment_id");
    }
  }
  return out;
}

}  // namespace

TreatmentCategories load_categories(const std::filesystem::path& path) {
  return read_categories(path, nullptr);
}

EffectStudy load_effect_study(const EffectStudyPaths& paths) {
  const csv::Table table = csv::read(paths.effects);
  const std::size_t c_id = table.require_column("treatment_id");
  const std::size_t c_est = table.require_column("estimate");
  const auto c_var = table.find_column("variance");
  if (!c_var && !paths.covariance) {
    throw ValidationError(table.source() + ": missing required column (or pass a covariance file)",
                          std::nullopt, "variance");
  }
  const auto k = static_cast<Eigen::Index>(table.row_count());
  std::vector<std::string> ids;
  Eigen::VectorXd estimates(k);
  Eigen::VectorXd variances(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    ids.push_back(table.text(r, c_id));
    estimates[r] = table.number(r, c_est);
    if (c_var) {
      variances[r] = table.number(r, *c_var);
      if (variances[r] < 0.0) {
        throw ValidationError(
            table.source() + ": negative variance; covariance is not positive semi-definite",
            r + 1, "variance");
      }
    }
  }
  require_unique(ids, "treatment");

  std::optional<EffectEstimates> effects;
  if (paths.covariance) {
    const csv::Table grid = csv::read(*paths.covariance);
    check_alignment(ids, grid.header(), grid.source() + ": header");
    if (grid.row_count() != static_cast<std::size_t>(k)) {
      throw ValidationError(grid.source() + ": expected " + std::to_string(k) + " rows");
    }
    std::vector<Eigen::Index> pos(k);
    for (Eigen::Index i = 0; i < k; ++i) pos[i] = *grid.find_column(ids[i]);
    Eigen::MatrixXd raw(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) raw(r, c) = grid.number(r, c);
    }
    Eigen::MatrixXd cov(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) cov(i, j) = raw(pos[i], pos[j]);
    }
    effects.emplace(ids, estimates, std::move(cov));
  } else {
    effects.emplace(EffectEstimates::from_variances(ids, estimates, variances));
  }

  ForecastMatrix forecasts =
      read_long_forecasts(paths.forecasts, ids, {"treatment_id", "prediction", true, false});
  if (paths.categories) forecasts = forecasts.with_categories(read_categories(*paths.categories, &ids));
  return EffectStudy{std::move(*effects), std::move(forecasts)};
}

EffectStudy load_effect_study(const std::filesystem::path& effects,
                              const std::filesystem::path& forecasts) {
  return load_effect_study(EffectStudyPaths{effects, forecasts, std::nullopt, std::nullopt});
}

ReplicationDataset load_replication_study(const std::filesystem::path& studies,
                                          const std::filesystem::path& forecasts) {
  const csv::Table table = csv::read(studies);
  const std::size_t c_id = table.require_column("study_id");
  const std::size_t c_orig = table.require_column("original_effect");
  const std::size_t c_n = table.require_column("replication_n");
  const std::size_t c_p = table.require_column("replication_p");
  const std::size_t c_dir = table.require_column("replication_direction");
  const auto c_alpha = table.find_column("alpha");
  const auto k = static_cast<Eigen::Index>(table.row_count());
  std::vector<std::string> ids;
  Eigen::VectorXd orig(k), p(k), alpha(k);
  Eigen::VectorXi n(k), dir(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    ids.push_back(table.text(r, c_id));
    orig[r] = table.number(r, c_orig);
    const long long nk = table.integer(r, c_n);
    if (nk < 2 || nk > std::numeric_limits<int>::max()) {
      throw ValidationError(table.source() + ": replication_n must be >= 2", r + 1,
                            "replication_n");
    }
    n[r] = static_cast<int>(nk);
    p[r] = table.number(r, c_p);
    if (!(p[r] > 0.0 && p[r] <= 1.0)) {
      throw ValidationError(table.source() + ": replication_p must lie in (0, 1]", r + 1,
                            "replication_p");
    }
    const long long d = table.integer(r, c_dir);
    if (d != 1 && d != -1) {
      throw ValidationError(table.source() + ": replication_direction must be +1 or -1", r + 1,
                            "replication_direction");
    }
    dir[r] = static_cast<int>(d);
    alpha[r] = c_alpha ? table.number(r, *c_alpha) : kDefaultAlpha;
  }
  require_unique(ids, "study");
  ForecastMatrix probs = read_long_forecasts(forecasts, ids, {"study_id", "probability", false, true});
  return ReplicationDataset(std::move(ids), std::move(orig), std::move(n), std::move(p),
                            std::move(dir), std::move(alpha), std::move(probs));
}

// ---------------------------------------------------------------------------
// Writers

namespace {
std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_long(const ForecastMatrix& forecasts, const std::filesystem::path& path,
                const std::string& row_column, const std::string& value_column) {
  std::ofstream out = open_for_write(path);
  const bool grouped = !forecasts.forecaster_groups().empty();
  std::vector<std::string> header{row_column, "forecaster_id", value_column};
  if (grouped) header.push_back("group");
  csv::write_row(out, header);
  // Forecaster-major order so a reload recovers the same column order.
  for (Eigen::Index f = 0; f < forecasts.forecasters(); ++f) {
    for (Eigen::Index k = 0; k < forecasts.treatments(); ++k) {
      if (!forecasts.is_observed(k, f)) continue;
      const std::string& fid = forecasts.forecaster_ids()[f];
      std::vector<std::string> row{forecasts.treatment_ids()[k], fid,
                                   csv::format_number(forecasts.predictions()(k, f))};
      if (grouped) {
        auto it = forecasts.forecaster_groups().find(fid);
        if (it == forecasts.forecaster_groups().end()) {
          throw Error("forecaster '" + fid + "' has no group; cannot write a grouped file");
        }
        row.push_back(it->second);
      }
      csv::write_row(out, row);
    }
  }
}
}  // namespace

void write_effects(const EffectEstimates& effects, const std::filesystem::path& path,
                   const std::optional<std::filesystem::path>& covariance_path) {
  const bool diagonal = effects.is_diagonal();
  if (!diagonal && !covariance_path) {
    throw Error("non-diagonal covariance needs a covariance file path");
  }
  std::ofstream out = open_for_write(path);
  csv::write_row(out, diagonal ? std::vector<std::string>{"treatment_id", "estimate", "variance"}
                               : std::vector<std::string>{"treatment_id", "estimate"});
  for (Eigen::Index k = 0; k < effects.size(); ++k) {
    std::vector<std::string> row{effects.treatment_ids()[k],
                                 csv::format_number(effects.estimates()[k])};
    if (diagonal) row.push_back(csv::format_number(effects.covariance()(k, k)));
    csv::write_row(out, row);
  }
  if (!diagonal) {
    std::ofstream cov = open_for_write(*covariance_path);
    csv::write_row(cov, effects.treatment_ids());
    for (Eigen::Index i = 0; i < effects.size(); ++i) {
      std::vector<std::string> row;
      for (Eigen::Index j = 0; j < effects.size(); ++j) {
        row.push_back(csv::format_number(effects.covariance()(i, j)));
      }
      csv::write_row(cov, row);
    }
  }
}

void write_forecasts(const ForecastMatrix& forecasts, const std::filesystem::path& path) {
  write_long(forecasts, path, "treatment_id", "prediction");
}

void write_categories(const TreatmentCategories& categories, const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  csv::write_row(out, {"treatment_id", "category", "sign", "kind"});
  for (const auto& [id, cat] : categories.by_treatment) {
    const bool diff = categories.kind_of(cat.label) == CategoryKind::difference;
    csv::write_row(out, {id, cat.label, cat.sign > 0 ? "1" : "-1", diff ? "difference" : "level"});
  }
}

void write_replication_study(const ReplicationDataset& dataset,
                             const std::filesystem::path& studies,
                             const std::filesystem::path& forecasts) {
  std::ofstream out = open_for_write(studies);
  csv::write_row(out, {"study_id", "original_effect", "replication_n", "replication_p",
                       "replication_direction", "alpha"});
  for (Eigen::Index k = 0; k < dataset.size(); ++k) {
    csv::write_row(out, {dataset.study_ids()[k], csv::format_number(dataset.original_effect()[k]),
                         std::to_string(dataset.replication_n()[k]),
                         csv::format_number(dataset.replication_p()[k]),
                         std::to_string(dataset.replication_direction()[k]),
                         csv::format_number(dataset.alpha()[k])});
  }
  write_long(dataset.forecaster_probs(), forecasts, "study_id", "probability");
}

}  // namespace feval
