#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace feval {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Noisy experimental estimates Y of the true treatment effects, together with
// the covariance they were estimated with.
class EffectEstimates {
 public:
  EffectEstimates(std::vector<std::string> treatment_ids, Eigen::VectorXd estimates,
                  Eigen::MatrixXd covariance);

  // Independent errors: diagonal covariance built from per-treatment variances.
  static EffectEstimates from_variances(std::vector<std::string> treatment_ids,
                                        Eigen::VectorXd estimates,
                                        const Eigen::VectorXd& variances);

  Eigen::Index size() const { return estimates_.size(); }
  const std::vector<std::string>& treatment_ids() const { return ids_; }
  const Eigen::VectorXd& estimates() const { return estimates_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  bool is_diagonal() const { return diagonal_; }
  Eigen::VectorXd standard_errors() const;
  std::optional<Eigen::Index> index_of(const std::string& treatment_id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::VectorXd estimates_;
  Eigen::MatrixXd covariance_;
  bool diagonal_ = true;
};

// Reverse coding of a treatment inside its category.
struct TreatmentCategory {
  std::string label;
  int sign = 1;  // +1 or -1
};

// A level category averages sign * (X - mu) over its members. A difference
// category holds exactly one +1 member k and one -1 member l and measures the
// bias of the difference (X_k - X_l) - (mu_k - mu_l).
enum class CategoryKind { level, difference };

struct TreatmentCategories {
  std::map<std::string, TreatmentCategory> by_treatment;
  std::map<std::string, CategoryKind> kinds;  // keyed by category label

  std::vector<std::string> labels() const;
  CategoryKind kind_of(const std::string& label) const;
};

// K x F forecasts with an observation mask (false where the forecaster
// skipped the treatment; the stored prediction is NaN there).
class ForecastMatrix {
 public:
  ForecastMatrix(std::vector<std::string> treatment_ids, std::vector<std::string> forecaster_ids,
                 Eigen::MatrixXd predictions, BoolMatrix observed,
                 std::map<std::string, std::string> forecaster_groups = {},
                 std::optional<TreatmentCategories> categories = std::nullopt);

  // Fully observed matrix.
  static ForecastMatrix dense(std::vector<std::string> treatment_ids,
                              std::vector<std::string> forecaster_ids,
                              Eigen::MatrixXd predictions);

  Eigen::Index treatments() const { return predictions_.rows(); }
  Eigen::Index forecasters() const { return predictions_.cols(); }
  const std::vector<std::string>& treatment_ids() const { return treatment_ids_; }
  const std::vector<std::string>& forecaster_ids() const { return forecaster_ids_; }
  const Eigen::MatrixXd& predictions() const { return predictions_; }
  const BoolMatrix& observed() const { return observed_; }
  bool is_observed(Eigen::Index k, Eigen::Index f) const { return observed_(k, f); }
  Eigen::Index observed_count() const { return observed_.count(); }

  const std::map<std::string, std::string>& forecaster_groups() const { return groups_; }
  const std::optional<TreatmentCategories>& categories() const { return categories_; }

  ForecastMatrix with_groups(std::map<std::string, std::string> groups) const;
  ForecastMatrix with_categories(TreatmentCategories categories) const;

  // Same forecasts with every non-missing prediction shifted by `offset`.
  ForecastMatrix shifted(double offset) const;

 private:
  void validate() const;

  std::vector<std::string> treatment_ids_;
  std::vector<std::string> forecaster_ids_;
  Eigen::MatrixXd predictions_;
  BoolMatrix observed_;
  std::map<std::string, std::string> groups_;
  std::optional<TreatmentCategories> categories_;
};

// Replication-project data: per-study original effect (normalized units),
// replication sample size, two-sided p-value and effect direction, plus the
// forecasters' predicted replication probabilities.
class ReplicationDataset {
 public:
  ReplicationDataset(std::vector<std::string> study_ids, Eigen::VectorXd original_effect,
                     Eigen::VectorXi replication_n, Eigen::VectorXd replication_p,
                     Eigen::VectorXi replication_direction, Eigen::VectorXd alpha,
                     ForecastMatrix forecaster_probs);

  Eigen::Index size() const { return original_effect_.size(); }
  const std::vector<std::string>& study_ids() const { return ids_; }
  const Eigen::VectorXd& original_effect() const { return original_effect_; }
  const Eigen::VectorXi& replication_n() const { return n_; }
  const Eigen::VectorXd& replication_p() const { return p_; }
  const Eigen::VectorXi& replication_direction() const { return direction_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const ForecastMatrix& forecaster_probs() const { return forecasts_; }

 private:
  std::vector<std::string> ids_;
  Eigen::VectorXd original_effect_;
  Eigen::VectorXi n_;
  Eigen::VectorXd p_;
  Eigen::VectorXi direction_;
  Eigen::VectorXd alpha_;
  ForecastMatrix forecasts_;
};

inline constexpr double kDefaultAlpha = 0.05;

// Replication effect Y* on the normalized scale:
// sqrt(n) * Y* = Phi^{-1}(1 - p/2) for direction +1 and Phi^{-1}(p/2) for -1.
Eigen::VectorXd backout_replication_effect(const ReplicationDataset& dataset);

// The replication effects as estimates with independent errors of variance 1/n.
EffectEstimates replication_effect_estimates(const ReplicationDataset& dataset);

struct EffectStudy {
  EffectEstimates effects;
  ForecastMatrix forecasts;
};

struct EffectStudyPaths {
  std::filesystem::path effects;
  std::filesystem::path forecasts;
  std::optional<std::filesystem::path> covariance;
  std::optional<std::filesystem::path> categories;
};

EffectStudy load_effect_study(const EffectStudyPaths& paths);
EffectStudy load_effect_study(const std::filesystem::path& effects,
                              const std::filesystem::path& forecasts);
TreatmentCategories load_categories(const std::filesystem::path& path);

ReplicationDataset load_replication_study(const std::filesystem::path& studies,
                                          const std::filesystem::path& forecasts);

// Writers emit the same schemas the loaders read. Numbers use the shortest
// round-trip decimal form so a reload reproduces every double exactly.
// Diagonal covariances are written as a variance column; otherwise a
// companion covariance file is required.
void write_effects(const EffectEstimates& effects, const std::filesystem::path& path,
                   const std::optional<std::filesystem::path>& covariance_path = std::nullopt);
void write_forecasts(const ForecastMatrix& forecasts, const std::filesystem::path& path);
void write_categories(const TreatmentCategories& categories, const std::filesystem::path& path);
void write_replication_study(const ReplicationDataset& dataset,
                             const std::filesystem::path& studies,
                             const std::filesystem::path& forecasts);

}  // namespace feval
