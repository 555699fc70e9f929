#include "dml/learners/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dml/error.hpp"
#include "dml/rng.hpp"

namespace dml {
namespace {

class EnsembleModel final : public Model {
 public:
  EnsembleModel(std::vector<FittedModel> components, Eigen::VectorXd weights)
      : components_(std::move(components)), weights_(std::move(weights)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (std::size_t c = 0; c < components_.size(); ++c) {
      out += weights_[static_cast<Eigen::Index>(c)] * components_[c].predict(x);
    }
    return out;
  }

 private:
  std::vector<FittedModel> components_;
  Eigen::VectorXd weights_;
};

}  // namespace

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index k = v.size();
  std::vector<double> sorted(v.data(), v.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, shift = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    cumulative += sorted[static_cast<std::size_t>(i)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[static_cast<std::size_t>(i)] - candidate > 0.0) shift = candidate;
  }
  return (v.array() - shift).max(0.0).matrix();
}

SimplexFit simplex_least_squares(const Eigen::MatrixXd& predictions, const Eigen::VectorXd& y,
                                 const SimplexOptions& options) {
  const Eigen::Index k = predictions.cols();
  if (k == 0) throw Error(ErrorCode::EmptyCandidates, "no prediction columns");
  if (predictions.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "rows != y length");
  const double n = static_cast<double>(y.size());
  const Eigen::MatrixXd gram = predictions.transpose() * predictions / n;
  const Eigen::VectorXd cross = predictions.transpose() * y / n;

  SimplexFit fit;
  fit.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();
  if (lipschitz > 0.0) {
    const double step = 1.0 / lipschitz;
    for (std::size_t it = 0; it < options.max_iter; ++it) {
      fit.iterations = it + 1;
      const Eigen::VectorXd gradient = gram * fit.weights - cross;
      const Eigen::VectorXd next = project_to_simplex(fit.weights - step * gradient);
      const double change = (next - fit.weights).lpNorm<Eigen::Infinity>();
      fit.weights = next;
      if (change < options.tol) break;
    }
  }
  fit.mse = (y - predictions * fit.weights).squaredNorm() / n;
  return fit;
}

Eigen::VectorXd cross_val_predict(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, const FoldPartition& partition,
                                  std::uint64_t seed) {
  if (partition.size() != static_cast<std::size_t>(x.rows())) {
    throw Error(ErrorCode::DimensionMismatch, "partition size != rows");
  }
  Eigen::VectorXd out(x.rows());
  for (std::size_t k = 0; k < partition.folds(); ++k) {
    const IndexList train = partition.complement(k);
    const IndexList test = partition.fold(k);
    const FittedModel model = fit(spec, select_rows(x, train), select_rows(y, train), derive_seed(seed, k));
    const Eigen::VectorXd pred = model.predict(select_rows(x, test));
    for (std::size_t i = 0; i < test.size(); ++i) {
      out[static_cast<Eigen::Index>(test[i])] = pred[static_cast<Eigen::Index>(i)];
    }
  }
  return out;
}

Eigen::VectorXd cross_val_predict(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, std::size_t folds, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  return cross_val_predict(spec, x, y, make_partition(n, std::min(folds, n), seed), derive_seed(seed, 1));
}

std::vector<LearnerSpec> default_ensemble_components(Task task) {
  return {LearnerSpec{LearnerKind::Lasso, task, {}, {}},
          LearnerSpec{LearnerKind::Boosting, task, {}, {}},
          LearnerSpec{LearnerKind::RandomForest, task, {}, {}}};
}

FittedModel fit_ensemble(const std::vector<LearnerSpec>& components, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, std::size_t cv_folds, std::uint64_t seed, Task task) {
  if (components.size() < 2) throw Error(ErrorCode::InvalidHyperparameter, "ensemble needs >= 2 components");
  if (cv_folds < 2) throw Error(ErrorCode::InvalidHyperparameter, "ensemble cv_folds must be >= 2");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw Error(ErrorCode::InsufficientData, "ensemble needs at least 2 rows");

  std::vector<LearnerSpec> specs = components;
  for (auto& s : specs) s.task = task;

  const FoldPartition partition = make_partition(n, std::min(cv_folds, n), derive_seed(seed, 0));
  Eigen::MatrixXd oof(x.rows(), static_cast<Eigen::Index>(specs.size()));
  for (std::size_t c = 0; c < specs.size(); ++c) {
    oof.col(static_cast<Eigen::Index>(c)) = cross_val_predict(specs[c], x, y, partition, derive_seed(seed, c + 1));
  }
  const SimplexFit weights = simplex_least_squares(oof, y);

  std::vector<FittedModel> refit;
  refit.reserve(specs.size());
  for (std::size_t c = 0; c < specs.size(); ++c) {
    refit.push_back(fit(specs[c], x, y, derive_seed(seed, c + 1)));
  }

  TrainingDiagnostics diag;
  diag.weights.assign(weights.weights.data(), weights.weights.data() + weights.weights.size());
  diag.cv_mse = weights.mse;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    diag.tuning["cv_mse_" + std::to_string(c)] = mean_squared_error(y, oof.col(static_cast<Eigen::Index>(c)));
  }
  auto model = std::make_shared<EnsembleModel>(std::move(refit), weights.weights);
  diag.in_sample_mse = mean_squared_error(y, model->predict(x));
  return FittedModel(std::move(model), task, static_cast<std::size_t>(x.cols()), std::move(diag));
}

LearnerKind select_best(const std::map<LearnerKind, double>& losses) {
  if (losses.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate losses");
  // std::map iterates in enum order, so strict comparison keeps the earlier kind on ties.
  auto best = losses.begin();
  for (auto it = losses.begin(); it != losses.end(); ++it) {
    if (!std::isfinite(it->second)) {
      throw Error(ErrorCode::InvalidArgument, std::string("non-finite loss for ") + to_string(it->first));
    }
    if (it->second < best->second) best = it;
  }
  return best->first;
}

std::map<std::string, LearnerKind> select_best(
    const std::map<std::string, std::map<LearnerKind, double>>& per_nuisance_losses) {
  std::map<std::string, LearnerKind> out;
  for (const auto& [nuisance, losses] : per_nuisance_losses) {
    if (losses.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidates for " + nuisance);
    out[nuisance] = select_best(losses);
  }
  return out;
}

}  // namespace dml
