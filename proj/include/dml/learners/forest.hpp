#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dml/learners/tree.hpp"

namespace dml {

struct ForestOptions {
  std::size_t trees = 1000;
  bool bootstrap = true;
  TreeOptions tree;  // tree.mtry = 0 selects all features
};

/// Bagged CART trees. Tree t draws its bootstrap sample and split features from
/// Rng(derive_seed(seed, t)), so the fit does not depend on the worker count.
class RandomForest final : public Model {
 public:
  static RandomForest fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const ForestOptions& options, std::uint64_t seed);

  /// Arithmetic mean of the trees' predictions, summed in tree order.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

/// Default features per split: ceil(p/3) for regression, ceil(sqrt(p)) for probability.
std::size_t default_mtry(std::size_t p, Task task);

FittedModel fit_forest_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y, std::uint64_t seed);

}  // namespace dml
