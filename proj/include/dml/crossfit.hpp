#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dml/data.hpp"
#include "dml/learners/learner.hpp"
#include "dml/scores.hpp"

namespace dml {

struct CrossfitConfig {
  std::size_t folds = 5;
  ScoreKind score = ScoreKind::ATE;
  /// Outcome regressions g(0,.), g(1,.) and, for PLM, l(.) = E[Y|Z].
  LearnerSpec learner_g{LearnerKind::Lasso, Task::Regression, {}, {}};
  /// Propensity m(.); always fit with Task::Probability.
  LearnerSpec learner_m{LearnerKind::Lasso, Task::Probability, {}, {}};
  double trim_lo = 0.01;
  double trim_hi = 0.99;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

/// Throws KTooSmall, InvalidCutoffs, InvalidArgument (alpha) or InvalidHyperparameter.
void validate(const CrossfitConfig& config);

struct FoldDiagnostics {
  std::size_t size = 0;
  double theta = 0.0;
  std::size_t n_trimmed = 0;
  double m_bar = 0.0;
  std::map<std::string, std::string> selected;
};

struct EstimateReport {
  ScoreKind score = ScoreKind::ATE;
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  std::size_t n_obs = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::size_t n_trimmed = 0;
  std::vector<FoldDiagnostics> per_fold;

  /// theta_hat +- this is the CI.
  double half_width() const { return 0.5 * (ci_hi - ci_lo); }
};

/// Nuisances for fold k, fit on the complement of fold k and evaluated on fold k.
using NuisanceProvider =
    std::function<NuisanceEstimates(const Dataset& data, const FoldPartition& partition, std::size_t k)>;

/// g(0,.) on untreated training rows, g(1,.) on treated training rows, m on all
/// training rows (trimmed), m_bar = training mean of D (untrimmed). PLM fits l
/// and m only. Learner seeds derive from seed ^ k. Throws
/// ArmMissingInTrainingFold when a needed arm has no training rows.
NuisanceEstimates fit_nuisances(const Dataset& data, const FoldPartition& partition, std::size_t k,
                                const CrossfitConfig& config);

/// Full cross-fitting pass plus per-observation quantities from it.
struct CrossfitRun {
  EstimateReport report;
  /// Out-of-fold nuisances stitched into data order.
  NuisanceEstimates nuisances;
  /// Scores at the final theta_hat, in data order.
  Eigen::VectorXd psi;
};

CrossfitRun crossfit_run(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config,
                         const NuisanceProvider& provider);

/// Partition from make_partition(N, K, config.seed), learners from config.
EstimateReport crossfit_estimate(const Dataset& data, const CrossfitConfig& config);
EstimateReport crossfit_estimate(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config);
EstimateReport crossfit_estimate(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config,
                                 const NuisanceProvider& provider);

}  // namespace dml
