#include <algorithm>
#include <memory>
#include <set>

#include "dml/error.hpp"
#include "dml/learners/ensemble.hpp"
#include "dml/rng.hpp"

namespace dml {

std::vector<LearnerSpec> default_best_candidates(Task task) {
  return {LearnerSpec{LearnerKind::Lasso, task, {}, {}},
          LearnerSpec{LearnerKind::RegTree, task, {}, {}},
          LearnerSpec{LearnerKind::RandomForest, task, {}, {}},
          LearnerSpec{LearnerKind::Boosting, task, {}, {}},
          LearnerSpec{LearnerKind::Ensemble, task, {}, {}}};
}

FittedModel fit_best(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     std::uint64_t seed) {
  std::vector<LearnerSpec> candidates =
      spec.components.empty() ? default_best_candidates(spec.task) : spec.components;
  std::set<LearnerKind> seen;
  for (auto& c : candidates) {
    c.task = spec.task;
    if (c.kind == LearnerKind::Best) throw Error(ErrorCode::InvalidHyperparameter, "Best cannot nest Best");
    if (!seen.insert(c.kind).second) {
      throw Error(ErrorCode::InvalidHyperparameter, std::string("duplicate Best candidate ") + to_string(c.kind));
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "Best needs candidates");

  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t folds = std::min<std::size_t>(static_cast<std::size_t>(spec.param("cv_folds", 5)), n);
  const FoldPartition partition = make_partition(n, folds, derive_seed(seed, 0x5eed));

  std::map<LearnerKind, double> losses;
  for (const auto& c : candidates) {
    losses[c.kind] = mean_squared_error(y, cross_val_predict(c, x, y, partition, derive_seed(seed, 0xcafe)));
  }
  const LearnerKind winner = select_best(losses);
  const auto& chosen = *std::find_if(candidates.begin(), candidates.end(),
                                     [&](const LearnerSpec& c) { return c.kind == winner; });

  FittedModel final_model = fit(chosen, x, y, seed);
  TrainingDiagnostics diag = final_model.diagnostics();
  diag.selected = winner;
  diag.candidate_cv_mse = losses;
  diag.cv_mse = losses[winner];
  return FittedModel(final_model.shared_model(), spec.task, final_model.num_features(), std::move(diag));
}

}  // namespace dml
