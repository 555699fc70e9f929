#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dml/crossfit.hpp"
#include "dml/data.hpp"
#include "dml/scores.hpp"

namespace dml {

enum class DgpForm { Linear, Nonlinear };

const char* to_string(DgpForm form);
DgpForm dgp_form_from_string(const std::string& name);

/// Z ~ N(0, Sigma) with Sigma_jk = correlation^|j-k|. The propensity index is an
/// odd function of Z, so P(D = 1) = 1/2 and E[tau(Z)] = effect in both forms.
///
/// Linear:    g(0,z) = outcome_scale * sum_{j<s} z_j + confounder_scale * sum_{s<=j<s+c} z_j
///            tau(z) = effect + effect_heterogeneity * z_1
///            m(z)   = clip(logistic(propensity_scale * sum_{j<s+c} z_j))
/// where c = confounders: extra coordinates that drive treatment strongly but
/// the outcome only weakly.
/// Nonlinear: g(0,z) = outcome_scale * (sin(z_1) + z_2 z_3 / 2 + z_4^2 / 2 + z_2 / 2)
///            tau(z) = effect + effect_heterogeneity * sin(z_1)
///            m(z)   = clip(logistic(propensity_scale * (z_1 + sin(z_2) - tanh(z_3 + z_4) / 2)))
/// with g(1,z) = g(0,z) + tau(z), D ~ Bernoulli(m(Z)), Y = g(D,Z) + noise_sd * N(0,1).
struct DgpSpec {
  std::size_t p = 10;
  DgpForm form = DgpForm::Linear;
  std::size_t sparsity = 5;
  std::size_t confounders = 0;
  double confounder_scale = 0.0;
  double outcome_scale = 1.0;
  double propensity_scale = 0.5;
  double effect = 1.0;
  double effect_heterogeneity = 0.0;
  double propensity_lo = 0.1;
  double propensity_hi = 0.9;
  double noise_sd = 1.0;
  double correlation = 0.0;
  std::uint64_t seed = 0;
};

/// Throws InvalidArgument naming the offending field.
void validate(const DgpSpec& spec);

struct SyntheticSample {
  Dataset data;
  /// g0_hat, g1_hat, m_hat (the unclipped-by-trimming truth), l_hat = E[Y|Z]
  /// and m_bar = 1/2, all exact.
  NuisanceEstimates truth;
  double theta0_ate = 0.0;
};

/// Draw `n` rows with Rng(spec.seed). Throws InsufficientData for n < 2 and
/// DegenerateArm if a sample lands in one arm.
SyntheticSample generate(const DgpSpec& spec, std::size_t n);

/// Same draw with an explicit stream seed overriding spec.seed.
SyntheticSample generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed);

struct PopulationTargets {
  double ate = 0.0;
  double ate_se = 0.0;
  double atte = 0.0;
  double atte_se = 0.0;
  double p_treated = 0.0;
  double p_treated_se = 0.0;
  std::size_t draws = 0;
};

/// Brute-force Monte Carlo over `draws` covariate draws using the exact
/// tau(z) and m(z); ATTE = E[m tau] / E[m] with a delta-method SE.
PopulationTargets population_targets(const DgpSpec& spec, std::size_t draws, std::uint64_t seed);

/// Target of `kind` under `spec`. Analytic when it is known in closed form
/// (ATE always; ATTE and PLM with no heterogeneity), otherwise a 10^6-draw
/// Monte Carlo value. PLM with heterogeneity throws InvalidArgument.
double target_parameter(const DgpSpec& spec, ScoreKind kind);

enum class NuisanceMode {
  Learned,         // learners from the crossfit config
  Oracle,          // true g, m, l and m_bar injected on each fold
  TruePropensity,  // outcome learners from config, true m and m_bar
};

const char* to_string(NuisanceMode mode);
NuisanceMode nuisance_mode_from_string(const std::string& name);

struct ExperimentConfig {
  CrossfitConfig crossfit;
  NuisanceMode mode = NuisanceMode::Learned;
  /// Overrides target_parameter.
  std::optional<double> target;
};

struct ReplicationRecord {
  std::size_t rep = 0;
  double theta_hat = 0.0;
  double sigma_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  /// Plug-in mean of g1_hat - g0_hat over the same cross-fitted nuisances,
  /// with a CI of the same half-width.
  double naive_theta = 0.0;
  bool naive_covered = false;
  std::size_t n_trimmed = 0;
};

struct CoverageSummary {
  std::size_t n = 0;
  std::size_t reps = 0;
  double target = 0.0;
  double coverage = 0.0;
  double coverage_se = 0.0;
  double bias = 0.0;
  double bias_se = 0.0;
  double rmse = 0.0;
  double rmse_se = 0.0;
  double mean_sigma = 0.0;
  double mean_ci_width = 0.0;
  /// Fraction of reps with |theta_hat - target| <= 3 sigma_hat / sqrt(n).
  double within_3se = 0.0;
  double naive_coverage = 0.0;
  double naive_bias = 0.0;
  double naive_rmse = 0.0;
  std::vector<ReplicationRecord> records;
};

/// Rep r draws data with seed derive_seed(spec.seed, r) and cross-fits with
/// seed derive_seed(config.crossfit.seed, r). Reps run concurrently. The
/// naive estimate needs g0 and g1, so it is NaN for PLM. Throws
/// InvalidArgument for reps < 2.
CoverageSummary coverage_experiment(const DgpSpec& spec, std::size_t n, std::size_t reps,
                                    const ExperimentConfig& config);

struct RateTable {
  std::vector<std::size_t> n_grid;
  std::vector<CoverageSummary> rows;
  /// rmse[i + 1] / rmse[i].
  std::vector<double> ratios;
};

/// Throws InvalidArgument unless n_grid is strictly increasing.
RateTable rate_experiment(const DgpSpec& spec, const std::vector<std::size_t>& n_grid, std::size_t reps,
                          const ExperimentConfig& config);

}  // namespace dml
