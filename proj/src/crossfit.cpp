#include "dml/crossfit.hpp"

#include <cmath>

#include "dml/error.hpp"
#include "dml/normal.hpp"
#include "dml/parallel.hpp"
#include "dml/rng.hpp"

namespace dml {
namespace {

IndexList rows_with_treatment(const Dataset& data, const IndexList& rows, double arm) {
  IndexList out;
  for (Index i : rows) {
    if (data.treatments()[static_cast<Eigen::Index>(i)] == arm) out.push_back(i);
  }
  return out;
}

void record_selection(NuisanceEstimates& nu, const std::string& key, const FittedModel& model) {
  if (const auto& s = model.diagnostics().selected) nu.selected[key] = to_string(*s);
}

void scatter(Eigen::VectorXd& full, const IndexList& rows, const Eigen::VectorXd& part) {
  if (part.size() == 0 || full.size() == 0) return;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    full[static_cast<Eigen::Index>(rows[i])] = part[static_cast<Eigen::Index>(i)];
  }
}

void check_fold_nuisance(ScoreKind kind, const NuisanceEstimates& nu, std::size_t n) {
  const auto need = [n](const Eigen::VectorXd& v, const char* name) {
    if (static_cast<std::size_t>(v.size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, std::string(name) + " does not match fold size");
    }
  };
  need(nu.m_hat, "m_hat");
  if (kind == ScoreKind::PLM) {
    need(nu.l_hat, "l_hat");
  } else {
    need(nu.g0_hat, "g0_hat");
    if (kind == ScoreKind::ATE) need(nu.g1_hat, "g1_hat");
  }
}

}  // namespace

void validate(const CrossfitConfig& config) {
  if (config.folds < 2) throw Error(ErrorCode::KTooSmall, "K must be >= 2");
  if (!(config.trim_lo > 0.0 && config.trim_lo < config.trim_hi && config.trim_hi < 1.0)) {
    throw Error(ErrorCode::InvalidCutoffs, "need 0 < lo < hi < 1");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  validate(config.learner_g);
  validate(config.learner_m);
}

NuisanceEstimates fit_nuisances(const Dataset& data, const FoldPartition& partition, std::size_t k,
                                const CrossfitConfig& config) {
  const IndexList train = partition.complement(k);
  const IndexList test = partition.fold(k);
  const Eigen::MatrixXd& z = data.covariates();
  const Eigen::MatrixXd z_test = select_rows(z, test);
  const std::uint64_t fold_seed = config.seed ^ static_cast<std::uint64_t>(k);

  LearnerSpec g_spec = config.learner_g;
  g_spec.task = Task::Regression;
  LearnerSpec m_spec = config.learner_m;
  m_spec.task = Task::Probability;

  NuisanceEstimates nu;
  const Eigen::VectorXd d_train = select_rows(data.treatments(), train);
  nu.m_bar = d_train.mean();

  if (config.score == ScoreKind::PLM) {
    const FittedModel l = fit(g_spec, select_rows(z, train), select_rows(data.outcomes(), train),
                              derive_seed(fold_seed, 3));
    nu.l_hat = l.predict(z_test);
    record_selection(nu, "l", l);
  } else {
    const IndexList untreated = rows_with_treatment(data, train, 0.0);
    const IndexList treated = rows_with_treatment(data, train, 1.0);
    if (untreated.size() < 2 || treated.size() < 2) {
      throw Error(ErrorCode::ArmMissingInTrainingFold, "training complement needs >= 2 rows in each arm");
    }
    const FittedModel g0 = fit(g_spec, select_rows(z, untreated), select_rows(data.outcomes(), untreated),
                               derive_seed(fold_seed, 0));
    const FittedModel g1 = fit(g_spec, select_rows(z, treated), select_rows(data.outcomes(), treated),
                               derive_seed(fold_seed, 1));
    nu.g0_hat = g0.predict(z_test);
    nu.g1_hat = g1.predict(z_test);
    record_selection(nu, "g0", g0);
    record_selection(nu, "g1", g1);
  }
  const FittedModel m = fit(m_spec, select_rows(z, train), d_train, derive_seed(fold_seed, 2));
  const TrimResult trimmed = trim_propensity(m.predict(z_test), config.trim_lo, config.trim_hi);
  nu.m_hat = trimmed.values;
  nu.n_trimmed = trimmed.count;
  record_selection(nu, "m", m);
  return nu;
}

CrossfitRun crossfit_run(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config,
                         const NuisanceProvider& provider) {
  validate(config);
  if (partition.size() != data.size()) throw Error(ErrorCode::DimensionMismatch, "partition size != N");
  const std::size_t folds = partition.folds();
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());

  std::vector<NuisanceEstimates> fold_nu(folds);
  std::vector<double> fold_theta(folds);
  parallel_for(folds, [&](std::size_t k) {
    try {
      const IndexList test = partition.fold(k);
      NuisanceEstimates nu = provider(data, partition, k);
      check_fold_nuisance(config.score, nu, test.size());
      fold_theta[k] = solve_theta(config.score, select_rows(data.outcomes(), test),
                                  select_rows(data.treatments(), test), nu);
      fold_nu[k] = std::move(nu);
    } catch (const Error& e) {
      if (e.fold()) throw;
      throw e.with_fold(k);
    }
  });

  CrossfitRun run;
  EstimateReport& r = run.report;
  r.score = config.score;
  r.alpha = config.alpha;
  r.n_obs = data.size();
  r.folds = folds;
  r.seed = partition.seed();
  double theta_sum = 0.0;
  for (std::size_t k = 0; k < folds; ++k) theta_sum += fold_theta[k];
  r.theta_hat = theta_sum / static_cast<double>(folds);

  NuisanceEstimates& all = run.nuisances;
  const bool plm = config.score == ScoreKind::PLM;
  all.m_hat = Eigen::VectorXd::Zero(n);
  if (plm) {
    all.l_hat = Eigen::VectorXd::Zero(n);
  } else {
    all.g0_hat = Eigen::VectorXd::Zero(n);
    if (fold_nu[0].g1_hat.size() > 0) all.g1_hat = Eigen::VectorXd::Zero(n);
  }
  run.psi = Eigen::VectorXd::Zero(n);
  double jacobian_sum = 0.0;
  for (std::size_t k = 0; k < folds; ++k) {
    const IndexList test = partition.fold(k);
    const NuisanceEstimates& nu = fold_nu[k];
    const Eigen::VectorXd y = select_rows(data.outcomes(), test);
    const Eigen::VectorXd d = select_rows(data.treatments(), test);
    scatter(run.psi, test, score_values(config.score, y, d, nu, r.theta_hat));
    scatter(all.m_hat, test, nu.m_hat);
    scatter(all.l_hat, test, nu.l_hat);
    scatter(all.g0_hat, test, nu.g0_hat);
    scatter(all.g1_hat, test, nu.g1_hat);
    if (plm) jacobian_sum += (d - nu.m_hat).squaredNorm();
    all.n_trimmed += nu.n_trimmed;

    FoldDiagnostics diag;
    diag.size = test.size();
    diag.theta = fold_theta[k];
    diag.n_trimmed = nu.n_trimmed;
    diag.m_bar = nu.m_bar;
    diag.selected = nu.selected;
    r.per_fold.push_back(std::move(diag));
  }
  r.n_trimmed = all.n_trimmed;

  double variance = run.psi.squaredNorm() / static_cast<double>(n);
  if (plm) {
    // The PLM score has slope -E[(D - m)^2] in theta rather than -1.
    const double jacobian = jacobian_sum / static_cast<double>(n);
    variance /= jacobian * jacobian;
  }
  r.sigma_hat = std::sqrt(variance);
  const double half = normal_quantile(1.0 - config.alpha / 2.0) * r.sigma_hat / std::sqrt(static_cast<double>(n));
  r.ci_lo = r.theta_hat - half;
  r.ci_hi = r.theta_hat + half;
  return run;
}

EstimateReport crossfit_estimate(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config,
                                 const NuisanceProvider& provider) {
  return crossfit_run(data, partition, config, provider).report;
}

EstimateReport crossfit_estimate(const Dataset& data, const FoldPartition& partition, const CrossfitConfig& config) {
  return crossfit_estimate(data, partition, config,
                           [&config](const Dataset& ds, const FoldPartition& part, std::size_t k) {
                             return fit_nuisances(ds, part, k, config);
                           });
}

EstimateReport crossfit_estimate(const Dataset& data, const CrossfitConfig& config) {
  validate(config);
  return crossfit_estimate(data, make_partition(data.size(), config.folds, config.seed), config);
}

}  // namespace dml
