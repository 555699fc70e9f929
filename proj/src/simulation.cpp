#include "dml/simulation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "dml/error.hpp"
#include "dml/parallel.hpp"
#include "dml/rng.hpp"

namespace dml {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void draw_covariates(const DgpSpec& spec, Rng& rng, double* z) {
  const double rho = spec.correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (std::size_t j = 0; j < spec.p; ++j) {
    const double e = rng.normal();
    z[j] = j == 0 ? e : rho * z[j - 1] + innovation * e;
  }
}

struct Truth {
  double g0;
  double tau;
  double m;
};

Truth evaluate(const DgpSpec& spec, const double* z) {
  Truth t{};
  double index = 0.0;
  if (spec.form == DgpForm::Linear) {
    double strong = 0.0, weak = 0.0;
    for (std::size_t j = 0; j < spec.sparsity; ++j) strong += z[j];
    for (std::size_t j = spec.sparsity; j < spec.sparsity + spec.confounders; ++j) weak += z[j];
    t.g0 = spec.outcome_scale * strong + spec.confounder_scale * weak;
    t.tau = spec.effect + spec.effect_heterogeneity * z[0];
    index = spec.propensity_scale * (strong + weak);
  } else {
    t.g0 = spec.outcome_scale * (std::sin(z[0]) + 0.5 * z[1] * z[2] + 0.5 * z[3] * z[3] + 0.5 * z[1]);
    t.tau = spec.effect + spec.effect_heterogeneity * std::sin(z[0]);
    index = spec.propensity_scale * (z[0] + std::sin(z[1]) - 0.5 * std::tanh(z[2] + z[3]));
  }
  t.m = std::clamp(logistic(index), spec.propensity_lo, spec.propensity_hi);
  return t;
}

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments summarize(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return m;
}

NuisanceEstimates truth_on(const NuisanceEstimates& truth, const IndexList& rows) {
  NuisanceEstimates out;
  out.g0_hat = select_rows(truth.g0_hat, rows);
  out.g1_hat = select_rows(truth.g1_hat, rows);
  out.m_hat = select_rows(truth.m_hat, rows);
  out.l_hat = select_rows(truth.l_hat, rows);
  out.m_bar = truth.m_bar;
  return out;
}

}  // namespace

const char* to_string(DgpForm form) { return form == DgpForm::Linear ? "linear" : "nonlinear"; }

DgpForm dgp_form_from_string(const std::string& name) {
  const std::string s = lower(name);
  if (s == "linear") return DgpForm::Linear;
  if (s == "nonlinear") return DgpForm::Nonlinear;
  throw Error(ErrorCode::InvalidArgument, "unknown DGP form '" + name + "'");
}

const char* to_string(NuisanceMode mode) {
  switch (mode) {
    case NuisanceMode::Learned: return "learned";
    case NuisanceMode::Oracle: return "oracle";
    case NuisanceMode::TruePropensity: return "true_propensity";
  }
  return "?";
}

NuisanceMode nuisance_mode_from_string(const std::string& name) {
  const std::string s = lower(name);
  if (s == "learned") return NuisanceMode::Learned;
  if (s == "oracle") return NuisanceMode::Oracle;
  if (s == "true_propensity") return NuisanceMode::TruePropensity;
  throw Error(ErrorCode::InvalidArgument, "unknown nuisance mode '" + name + "'");
}

void validate(const DgpSpec& spec) {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "dgp." + what); };
  if (spec.p == 0) fail("p must be >= 1");
  if (spec.form == DgpForm::Linear && (spec.sparsity == 0 || spec.sparsity > spec.p)) {
    fail("sparsity must lie in [1, p]");
  }
  if (spec.form == DgpForm::Linear && spec.sparsity + spec.confounders > spec.p) {
    fail("sparsity + confounders must not exceed p");
  }
  if (spec.form == DgpForm::Nonlinear && spec.confounders != 0) fail("confounders apply to the linear form only");
  if (spec.form == DgpForm::Nonlinear && spec.p < 4) fail("p must be >= 4 for the nonlinear form");
  if (!(spec.propensity_lo > 0.0 && spec.propensity_lo < 0.5 &&
        std::abs(spec.propensity_lo + spec.propensity_hi - 1.0) < 1e-12)) {
    fail("propensity bounds must be (eps, 1 - eps) with 0 < eps < 0.5");
  }
  if (!(spec.noise_sd > 0.0 && std::isfinite(spec.noise_sd))) fail("noise_sd must be positive");
  if (!(spec.correlation > -1.0 && spec.correlation < 1.0)) fail("correlation must lie in (-1, 1)");
  for (double v : {spec.outcome_scale, spec.propensity_scale, spec.effect, spec.effect_heterogeneity,
                   spec.confounder_scale}) {
    if (!std::isfinite(v)) fail("coefficients must be finite");
  }
}

SyntheticSample generate(const DgpSpec& spec, std::size_t n) { return generate(spec, n, spec.seed); }

SyntheticSample generate(const DgpSpec& spec, std::size_t n, std::uint64_t seed) {
  validate(spec);
  if (n < 2) throw Error(ErrorCode::InsufficientData, "need N >= 2");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(spec.p);
  Eigen::MatrixXd z(rows, cols);
  Eigen::VectorXd y(rows), d(rows);
  NuisanceEstimates truth;
  truth.g0_hat.resize(rows);
  truth.g1_hat.resize(rows);
  truth.m_hat.resize(rows);
  truth.l_hat.resize(rows);
  truth.m_bar = 0.5;

  Rng rng(seed);
  std::vector<double> zi(spec.p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    draw_covariates(spec, rng, zi.data());
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = zi[static_cast<std::size_t>(j)];
    const Truth t = evaluate(spec, zi.data());
    if (!(t.m >= spec.propensity_lo && t.m <= spec.propensity_hi)) {
      throw Error(ErrorCode::PropensityOutOfRange, "generated propensity left its bounds");
    }
    d[i] = rng.bernoulli(t.m) ? 1.0 : 0.0;
    const double noise = spec.noise_sd * rng.normal();
    truth.g0_hat[i] = t.g0;
    truth.g1_hat[i] = t.g0 + t.tau;
    truth.m_hat[i] = t.m;
    truth.l_hat[i] = t.g0 + t.m * t.tau;
    y[i] = t.g0 + d[i] * t.tau + noise;
  }
  SyntheticSample out{validate_dataset(std::move(y), std::move(d), std::move(z)), std::move(truth), spec.effect};
  return out;
}

PopulationTargets population_targets(const DgpSpec& spec, std::size_t draws, std::uint64_t seed) {
  validate(spec);
  if (draws < 2) throw Error(ErrorCode::InsufficientData, "need >= 2 draws");
  Rng rng(seed);
  std::vector<double> zi(spec.p);
  double s_tau = 0.0, s_tau2 = 0.0, s_m = 0.0, s_m2 = 0.0, s_mt = 0.0, s_mt2 = 0.0, s_mt_m = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    draw_covariates(spec, rng, zi.data());
    const Truth t = evaluate(spec, zi.data());
    const double mt = t.m * t.tau;
    s_tau += t.tau;
    s_tau2 += t.tau * t.tau;
    s_m += t.m;
    s_m2 += t.m * t.m;
    s_mt += mt;
    s_mt2 += mt * mt;
    s_mt_m += mt * t.m;
  }
  const double n = static_cast<double>(draws);
  const auto var = [n](double s, double s2) { return std::max(0.0, (s2 - s * s / n) / (n - 1.0)); };
  PopulationTargets out;
  out.draws = draws;
  out.ate = s_tau / n;
  out.ate_se = std::sqrt(var(s_tau, s_tau2) / n);
  out.p_treated = s_m / n;
  out.p_treated_se = std::sqrt(var(s_m, s_m2) / n);
  // Ratio estimator mean(m tau) / mean(m); delta-method variance.
  const double a = s_mt / n, b = s_m / n;
  out.atte = a / b;
  const double cov_ab = (s_mt_m - s_mt * s_m / n) / (n - 1.0);
  const double ratio_var = (var(s_mt, s_mt2) - 2.0 * out.atte * cov_ab + out.atte * out.atte * var(s_m, s_m2)) /
                           (b * b);
  out.atte_se = std::sqrt(std::max(0.0, ratio_var) / n);
  return out;
}

double target_parameter(const DgpSpec& spec, ScoreKind kind) {
  validate(spec);
  if (kind == ScoreKind::ATE || spec.effect_heterogeneity == 0.0) return spec.effect;
  if (kind == ScoreKind::PLM) {
    throw Error(ErrorCode::InvalidArgument, "PLM target is only defined for homogeneous effects");
  }
  return population_targets(spec, 1'000'000, derive_seed(spec.seed, 0xa77e)).atte;
}

CoverageSummary coverage_experiment(const DgpSpec& spec, std::size_t n, std::size_t reps,
                                    const ExperimentConfig& config) {
  validate(spec);
  validate(config.crossfit);
  if (reps < 2) throw Error(ErrorCode::InvalidArgument, "reps must be >= 2");
  const ScoreKind kind = config.crossfit.score;
  const double target = config.target ? *config.target : target_parameter(spec, kind);

  std::vector<ReplicationRecord> records(reps);
  parallel_for(reps, [&](std::size_t r) {
    const SyntheticSample sample = generate(spec, n, derive_seed(spec.seed, r));
    CrossfitConfig cf = config.crossfit;
    cf.seed = derive_seed(config.crossfit.seed, r);
    const FoldPartition partition = make_partition(n, cf.folds, cf.seed);

    NuisanceProvider provider;
    switch (config.mode) {
      case NuisanceMode::Learned:
        provider = [&cf](const Dataset& ds, const FoldPartition& part, std::size_t k) {
          return fit_nuisances(ds, part, k, cf);
        };
        break;
      case NuisanceMode::Oracle:
        provider = [&sample](const Dataset&, const FoldPartition& part, std::size_t k) {
          return truth_on(sample.truth, part.fold(k));
        };
        break;
      case NuisanceMode::TruePropensity:
        provider = [&sample, &cf](const Dataset& ds, const FoldPartition& part, std::size_t k) {
          NuisanceEstimates nu = fit_nuisances(ds, part, k, cf);
          const NuisanceEstimates t = truth_on(sample.truth, part.fold(k));
          nu.m_hat = t.m_hat;
          nu.m_bar = t.m_bar;
          nu.n_trimmed = 0;
          return nu;
        };
        break;
    }
    const CrossfitRun run = crossfit_run(sample.data, partition, cf, provider);
    ReplicationRecord& rec = records[r];
    rec.rep = r;
    rec.theta_hat = run.report.theta_hat;
    rec.sigma_hat = run.report.sigma_hat;
    rec.ci_lo = run.report.ci_lo;
    rec.ci_hi = run.report.ci_hi;
    rec.covered = rec.ci_lo <= target && target <= rec.ci_hi;
    rec.n_trimmed = run.report.n_trimmed;
    if (run.nuisances.g0_hat.size() > 0 && run.nuisances.g1_hat.size() > 0) {
      rec.naive_theta = (run.nuisances.g1_hat - run.nuisances.g0_hat).mean();
      const double half = run.report.half_width();
      rec.naive_covered = rec.naive_theta - half <= target && target <= rec.naive_theta + half;
    } else {
      rec.naive_theta = std::numeric_limits<double>::quiet_NaN();
    }
  });

  CoverageSummary s;
  s.n = n;
  s.reps = reps;
  s.target = target;
  const double R = static_cast<double>(reps);
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> errors, squared, covered;
  double naive_err = 0.0, naive_sq = 0.0, naive_cov = 0.0;
  for (const auto& rec : records) {
    const double e = rec.theta_hat - target;
    errors.push_back(e);
    squared.push_back(e * e);
    covered.push_back(rec.covered ? 1.0 : 0.0);
    s.mean_sigma += rec.sigma_hat / R;
    s.mean_ci_width += (rec.ci_hi - rec.ci_lo) / R;
    if (std::abs(e) <= 3.0 * rec.sigma_hat / root_n) s.within_3se += 1.0 / R;
    naive_err += (rec.naive_theta - target) / R;
    naive_sq += (rec.naive_theta - target) * (rec.naive_theta - target) / R;
    naive_cov += (rec.naive_covered ? 1.0 : 0.0) / R;
  }
  const Moments cov = summarize(covered), bias = summarize(errors), mse = summarize(squared);
  s.coverage = cov.mean;
  s.coverage_se = std::sqrt(cov.mean * (1.0 - cov.mean) / R);
  s.bias = bias.mean;
  s.bias_se = bias.se;
  s.rmse = std::sqrt(mse.mean);
  s.rmse_se = s.rmse > 0.0 ? mse.se / (2.0 * s.rmse) : 0.0;
  s.naive_coverage = naive_cov;
  s.naive_bias = naive_err;
  s.naive_rmse = std::sqrt(naive_sq);
  s.records = std::move(records);
  return s;
}

RateTable rate_experiment(const DgpSpec& spec, const std::vector<std::size_t>& n_grid, std::size_t reps,
                          const ExperimentConfig& config) {
  if (n_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty N grid");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (n_grid[i] <= n_grid[i - 1]) throw Error(ErrorCode::InvalidArgument, "N grid must be strictly increasing");
  }
  RateTable table;
  table.n_grid = n_grid;
  for (std::size_t n : n_grid) table.rows.push_back(coverage_experiment(spec, n, reps, config));
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    table.ratios.push_back(table.rows[i].rmse / table.rows[i - 1].rmse);
  }
  return table;
}

}  // namespace dml
