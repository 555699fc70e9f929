#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dml/learners/tree.hpp"

namespace dml {

struct BoostingOptions {
  std::size_t depth = 2;
  std::size_t min_leaf = 5;
  double learning_rate = 0.1;
  std::size_t rounds = 100;
};

/// Least-squares gradient boosting: F_0 = mean(y), F_m = F_{m-1} + lr * tree_m
/// with tree_m fit to the current residuals. Each leaf step shrinks that leaf's
/// SSE, so training loss never increases across rounds.
class BoostedTrees final : public Model {
 public:
  static BoostedTrees fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const BoostingOptions& options);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;

  /// Training MSE after 0..rounds rounds.
  const std::vector<double>& training_loss() const { return training_loss_; }
  std::size_t rounds() const { return trees_.size(); }
  double learning_rate() const { return learning_rate_; }

 private:
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
  std::vector<double> training_loss_;
};

/// Learning rates searched by cross-validation when none is fixed.
const std::vector<double>& boosting_learning_rate_grid();

/// Learner entry point for LearnerKind::Boosting. Without both learning_rate
/// and rounds fixed, picks them by cv_folds-fold CV (default 10) over the
/// learning-rate grid and every round count up to max_rounds (default 300).
FittedModel fit_boosting_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, std::uint64_t seed);

}  // namespace dml
