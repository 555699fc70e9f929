#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dml {

/// Declaration order doubles as the tie-break order for model selection.
enum class LearnerKind { Lasso, RegTree, RandomForest, Boosting, Ensemble, Best, OracleLinear };

/// Regression fits E[y|x]; Probability fits P(y=1|x) for y in {0,1}.
enum class Task { Regression, Probability };

const char* to_string(LearnerKind kind);
/// Accepts the CLI spellings: lasso, reg_tree, random_forest, boosting, ensemble,
/// best, oracle_linear. Throws InvalidArgument otherwise.
LearnerKind learner_kind_from_string(const std::string& name);
/// Column heading used in report tables ("Reg. Tree", "Random Forest", ...).
const char* display_name(LearnerKind kind);

using Hyperparameters = std::map<std::string, double>;

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Lasso;
  Task task = Task::Regression;
  Hyperparameters params;
  /// Ensemble: the combined learners. Best: the candidates. Empty means defaults.
  std::vector<LearnerSpec> components;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  bool has(const std::string& key) const { return params.count(key) != 0; }
};

/// Throws InvalidHyperparameter naming the key for unknown keys or values out of range.
void validate(const LearnerSpec& spec);

/// Hyperparameter keys accepted by a kind.
const std::vector<std::string>& known_hyperparameters(LearnerKind kind);

/// Polymorphic fitted state. Implementations are immutable after construction.
class Model {
 public:
  virtual ~Model() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

struct TrainingDiagnostics {
  double in_sample_mse = 0.0;
  std::optional<double> cv_mse;
  /// Ensemble weights, in component order.
  std::vector<double> weights;
  /// Best: the kind that was selected, and each candidate's CV loss.
  std::optional<LearnerKind> selected;
  std::map<LearnerKind, double> candidate_cv_mse;
  /// Tuning choices, e.g. lambda, ccp_alpha, learning_rate, rounds.
  std::map<std::string, double> tuning;
};

class FittedModel {
 public:
  FittedModel(std::shared_ptr<const Model> model, Task task, std::size_t num_features,
              TrainingDiagnostics diagnostics)
      : model_(std::move(model)),
        task_(task),
        num_features_(num_features),
        diagnostics_(std::move(diagnostics)) {}

  /// Throws DimensionMismatch if x has the wrong column count. Probability
  /// predictions are clamped to [0, 1].
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

  Task task() const { return task_; }
  std::size_t num_features() const { return num_features_; }
  const TrainingDiagnostics& diagnostics() const { return diagnostics_; }
  const Model& model() const { return *model_; }
  std::shared_ptr<const Model> shared_model() const { return model_; }

 private:
  std::shared_ptr<const Model> model_;
  Task task_;
  std::size_t num_features_;
  TrainingDiagnostics diagnostics_;
};

/// Fits `spec` to (x, y). Identical arguments give bit-identical predictions.
FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                std::uint64_t seed);

/// K-fold out-of-sample predictions of `spec`, one per row of x.
Eigen::VectorXd cross_val_predict(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, std::size_t folds, std::uint64_t seed);

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction);

}  // namespace dml
