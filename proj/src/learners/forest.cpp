#include "dml/learners/forest.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "dml/error.hpp"
#include "dml/parallel.hpp"

namespace dml {

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const ForestOptions& options, std::uint64_t seed) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() < 1) throw Error(ErrorCode::InsufficientData, "forest needs data");
  if (options.trees < 1) throw Error(ErrorCode::InvalidHyperparameter, "trees must be >= 1");

  const std::size_t n = static_cast<std::size_t>(x.rows());
  RandomForest forest;
  forest.trees_.resize(options.trees);
  parallel_for(options.trees, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<Index> rows(n);
    if (options.bootstrap) {
      for (auto& r : rows) r = rng.index(n);
    } else {
      std::iota(rows.begin(), rows.end(), Index{0});
    }
    forest.trees_[t] = RegressionTree::grow(x, y, rows, options.tree, &rng);
  });
  return forest;
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.rows());
  for (const auto& tree : trees_) sum += tree.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::size_t default_mtry(std::size_t p, Task task) {
  if (p == 0) return 0;
  const double pd = static_cast<double>(p);
  const double m = task == Task::Regression ? std::ceil(pd / 3.0) : std::ceil(std::sqrt(pd));
  return static_cast<std::size_t>(m);
}

FittedModel fit_forest_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, std::uint64_t seed) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  ForestOptions options;
  options.trees = static_cast<std::size_t>(spec.param("trees", 1000));
  options.bootstrap = spec.param("bootstrap", 1.0) != 0.0;
  options.tree.min_leaf = static_cast<std::size_t>(spec.param("min_leaf", 5));
  options.tree.max_depth = static_cast<std::size_t>(spec.param("max_depth", 64));
  options.tree.mtry = spec.has("mtry") ? static_cast<std::size_t>(spec.param("mtry", 0))
                                       : default_mtry(p, spec.task);

  auto forest = std::make_shared<RandomForest>(RandomForest::fit(x, y, options, seed));
  TrainingDiagnostics diag;
  diag.tuning["trees"] = static_cast<double>(options.trees);
  diag.tuning["mtry"] = static_cast<double>(options.tree.mtry);
  diag.in_sample_mse = mean_squared_error(y, forest->predict(x));
  return FittedModel(std::move(forest), spec.task, p, std::move(diag));
}

}  // namespace dml
