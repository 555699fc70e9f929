#include "dml/learners/boosting.hpp"

#include <limits>
#include <memory>
#include <numeric>

#include "dml/error.hpp"

namespace dml {
namespace {

// Runs `rounds` boosting rounds on the given training rows and reports the
// held-out SSE after every round (index 0 = before any tree).
std::vector<double> held_out_curve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   const IndexList& train, const IndexList& test,
                                   const BoostingOptions& options) {
  const Eigen::MatrixXd x_train = select_rows(x, train);
  const Eigen::VectorXd y_train = select_rows(y, train);
  const Eigen::MatrixXd x_test = select_rows(x, test);
  const Eigen::VectorXd y_test = select_rows(y, test);

  std::vector<Index> rows(train.size());
  std::iota(rows.begin(), rows.end(), Index{0});
  const TreeGrower grower(x_train, rows);
  TreeOptions tree_options;
  tree_options.max_depth = options.depth;
  tree_options.min_leaf = options.min_leaf;

  const double base = y_train.mean();
  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(y_train.size(), base);
  Eigen::VectorXd predicted = Eigen::VectorXd::Constant(y_test.size(), base);
  std::vector<double> curve{(y_test - predicted).squaredNorm()};
  for (std::size_t m = 0; m < options.rounds; ++m) {
    const RegressionTree tree = grower.grow(y_train - fitted, tree_options);
    fitted += options.learning_rate * tree.predict(x_train);
    predicted += options.learning_rate * tree.predict(x_test);
    curve.push_back((y_test - predicted).squaredNorm());
  }
  return curve;
}

}  // namespace

BoostedTrees BoostedTrees::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const BoostingOptions& options) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() < 1) throw Error(ErrorCode::InsufficientData, "boosting needs data");
  if (!(options.learning_rate > 0.0 && options.learning_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidHyperparameter, "learning_rate must be in (0, 1]");
  }
  const double n = static_cast<double>(x.rows());
  std::vector<Index> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), Index{0});
  const TreeGrower grower(x, rows);
  TreeOptions tree_options;
  tree_options.max_depth = options.depth;
  tree_options.min_leaf = options.min_leaf;

  BoostedTrees model;
  model.base_ = y.mean();
  model.learning_rate_ = options.learning_rate;
  Eigen::VectorXd fitted = Eigen::VectorXd::Constant(y.size(), model.base_);
  model.training_loss_.push_back((y - fitted).squaredNorm() / n);
  model.trees_.reserve(options.rounds);
  for (std::size_t m = 0; m < options.rounds; ++m) {
    RegressionTree tree = grower.grow(y - fitted, tree_options);
    fitted += options.learning_rate * tree.predict(x);
    model.training_loss_.push_back((y - fitted).squaredNorm() / n);
    model.trees_.push_back(std::move(tree));
  }
  return model;
}

Eigen::VectorXd BoostedTrees::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), base_);
  for (const auto& tree : trees_) out += learning_rate_ * tree.predict(x);
  return out;
}

const std::vector<double>& boosting_learning_rate_grid() {
  static const std::vector<double> grid{0.02, 0.05, 0.1, 0.2};
  return grid;
}

FittedModel fit_boosting_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw Error(ErrorCode::InsufficientData, "boosting needs at least 2 rows");

  BoostingOptions options;
  options.depth = static_cast<std::size_t>(spec.param("depth", 2));
  options.min_leaf = static_cast<std::size_t>(spec.param("min_leaf", 5));

  TrainingDiagnostics diag;
  if (spec.has("learning_rate") && spec.has("rounds")) {
    options.learning_rate = spec.param("learning_rate", 0.1);
    options.rounds = static_cast<std::size_t>(spec.param("rounds", 100));
  } else {
    const std::vector<double> grid = spec.has("learning_rate")
                                         ? std::vector<double>{spec.param("learning_rate", 0.1)}
                                         : boosting_learning_rate_grid();
    const std::size_t max_rounds = static_cast<std::size_t>(spec.param("max_rounds", 300));
    const std::size_t folds = std::min<std::size_t>(static_cast<std::size_t>(spec.param("cv_folds", 10)), n);
    const FoldPartition partition = make_partition(n, folds, derive_seed(seed, 0));

    double best = std::numeric_limits<double>::infinity();
    for (double lr : grid) {
      BoostingOptions trial = options;
      trial.learning_rate = lr;
      trial.rounds = max_rounds;
      std::vector<double> total(max_rounds + 1, 0.0);
      for (std::size_t k = 0; k < folds; ++k) {
        const auto curve = held_out_curve(x, y, partition.complement(k), partition.fold(k), trial);
        for (std::size_t m = 0; m <= max_rounds; ++m) total[m] += curve[m];
      }
      for (std::size_t m = 0; m <= max_rounds; ++m) {
        if (total[m] < best) {
          best = total[m];
          options.learning_rate = lr;
          options.rounds = m;
        }
      }
    }
    diag.cv_mse = best / static_cast<double>(n);
  }

  auto model = std::make_shared<BoostedTrees>(BoostedTrees::fit(x, y, options));
  diag.tuning["learning_rate"] = options.learning_rate;
  diag.tuning["rounds"] = static_cast<double>(options.rounds);
  diag.in_sample_mse = model->training_loss().back();
  return FittedModel(std::move(model), spec.task, static_cast<std::size_t>(x.cols()), std::move(diag));
}

}  // namespace dml
