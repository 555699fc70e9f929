#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dml/data.hpp"
#include "dml/learners/learner.hpp"

namespace dml {

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct SimplexOptions {
  std::size_t max_iter = 5000;
  double tol = 1e-9;
};

struct SimplexFit {
  Eigen::VectorXd weights;
  std::size_t iterations = 0;
  double mse = 0.0;
};

/// Minimizes (1/n)||y - P w||^2 over the simplex by projected gradient descent
/// with step 1/L, starting from uniform weights. Columns with identical
/// predictions therefore keep identical weights.
SimplexFit simplex_least_squares(const Eigen::MatrixXd& predictions, const Eigen::VectorXd& y,
                                 const SimplexOptions& options = {});

/// Out-of-fold predictions on a given partition; fold k is fit with seed
/// derive_seed(seed, k).
Eigen::VectorXd cross_val_predict(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& y, const FoldPartition& partition,
                                  std::uint64_t seed);

/// Lasso, Boosting, RandomForest with default settings.
std::vector<LearnerSpec> default_ensemble_components(Task task);

/// Simplex-weighted combination of `components` with weights minimizing the
/// cv_folds-fold out-of-sample MSE; components are then refit on all rows.
FittedModel fit_ensemble(const std::vector<LearnerSpec>& components, const Eigen::MatrixXd& x,
                         const Eigen::VectorXd& y, std::size_t cv_folds, std::uint64_t seed,
                         Task task = Task::Regression);

/// Per-nuisance argmin of CV loss. Exact ties go to the kind declared first in
/// LearnerKind (Lasso < RegTree < RandomForest < Boosting < Ensemble).
/// Throws EmptyCandidates or InvalidArgument (non-finite loss).
std::map<std::string, LearnerKind> select_best(
    const std::map<std::string, std::map<LearnerKind, double>>& per_nuisance_losses);
LearnerKind select_best(const std::map<LearnerKind, double>& losses);

/// Lasso, RegTree, RandomForest, Boosting, Ensemble with default settings.
std::vector<LearnerSpec> default_best_candidates(Task task);

/// Scores each candidate by cv_folds-fold CV MSE (default 5) on a shared
/// partition, then refits the winner exactly as fit(winner, x, y, seed) would.
FittedModel fit_best(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::uint64_t seed);

}  // namespace dml
