#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dml/data.hpp"
#include "dml/learners/learner.hpp"
#include "dml/rng.hpp"

namespace dml {

struct TreeOptions {
  std::size_t min_leaf = 5;
  std::size_t max_depth = 64;
  /// Features examined per split; 0 or >= p means all of them (no randomness).
  std::size_t mtry = 0;
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean response of the node's training samples
  double sse = 0.0;    // training sum of squared deviations from `value`
  std::size_t count = 0;

  bool is_leaf() const { return left < 0; }
};

/// Weakest-link (cost-complexity) pruning path. node_alpha[i] is the penalty at
/// which node i collapses into a leaf (infinity for leaves); alphas is the
/// ascending list of distinct collapse penalties.
struct PruningPath {
  std::vector<double> node_alpha;
  std::vector<double> alphas;
};

/// CART regression tree grown to minimize squared error. For 0/1 responses the
/// squared-error criterion is proportional to Gini impurity, so the same tree
/// serves the probability task.
class RegressionTree final : public Model {
 public:
  /// Grows on the samples `rows` of (x, y); duplicates act as integer weights.
  static RegressionTree grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             std::span<const Index> rows, const TreeOptions& options,
                             Rng* rng = nullptr);
  static RegressionTree grow(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const TreeOptions& options);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override;
  double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  /// Sum of leaf SSEs over the training samples.
  double training_sse() const;

  PruningPath pruning_path() const;
  /// Predictions of the optimal subtree for penalty alpha.
  Eigen::VectorXd predict_pruned(const Eigen::MatrixXd& x, const PruningPath& path,
                                 double alpha) const;
  /// Compact copy of the optimal subtree for penalty alpha.
  RegressionTree pruned(double alpha) const;

 private:
  friend class TreeGrower;
  std::vector<TreeNode> nodes_;
};

/// Caches per-feature sample orderings of a fixed row set so many trees can be
/// grown on the same rows with different responses (boosting).
class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, std::span<const Index> rows);

  /// y is indexed by original row number.
  RegressionTree grow(const Eigen::VectorXd& y, const TreeOptions& options, Rng* rng = nullptr) const;

 private:
  std::vector<Index> rows_;
  std::size_t num_features_;
  std::vector<std::vector<double>> values_;        // [feature][sample]
  std::vector<std::vector<std::uint32_t>> order_;  // [feature] samples sorted by value
};

/// Learner entry point for LearnerKind::RegTree: grows with min_leaf (default
/// 5), then prunes with the cost-complexity penalty chosen by cv_folds-fold
/// cross-validation (default 10; 0 disables pruning; ccp_alpha fixes it).
FittedModel fit_tree_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, std::uint64_t seed);

}  // namespace dml
