#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dml/crossfit.hpp"
#include "dml/error.hpp"
#include "dml/normal.hpp"
#include "dml/parallel.hpp"
#include "dml/simulation.hpp"
#include "dml/rng.hpp"
#include "test_support.hpp"

using namespace dml;

namespace {

LearnerSpec oracle_linear(Task task) { return LearnerSpec{LearnerKind::OracleLinear, task, {}, {}}; }

CrossfitConfig linear_config(ScoreKind score, std::size_t folds, std::uint64_t seed) {
  CrossfitConfig c;
  c.score = score;
  c.folds = folds;
  c.seed = seed;
  c.learner_g = oracle_linear(Task::Regression);
  c.learner_m = oracle_linear(Task::Probability);
  return c;
}

// Injects the true nuisances restricted to the evaluation fold.
NuisanceProvider truth_provider(const NuisanceEstimates& truth) {
  return [&truth](const Dataset&, const FoldPartition& partition, std::size_t k) {
    const IndexList rows = partition.fold(k);
    NuisanceEstimates nu;
    nu.g0_hat = select_rows(truth.g0_hat, rows);
    nu.g1_hat = select_rows(truth.g1_hat, rows);
    nu.m_hat = select_rows(truth.m_hat, rows);
    nu.l_hat = select_rows(truth.l_hat, rows);
    nu.m_bar = truth.m_bar;
    return nu;
  };
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("Y equal to D is fit exactly in each arm") {
  std::mt19937_64 gen(1);
  const Eigen::VectorXd d = testing::random_binary(gen, 60);
  const Dataset data = validate_dataset(d, d, testing::random_matrix(gen, 60, 2));
  const FoldPartition part = make_partition(60, 3, 5);
  const CrossfitConfig config = linear_config(ScoreKind::ATE, 3, 5);
  for (std::size_t k = 0; k < 3; ++k) {
    const NuisanceEstimates nu = fit_nuisances(data, part, k, config);
    CHECK(nu.g0_hat.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((nu.g1_hat.array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
  const EstimateReport r = crossfit_estimate(data, part, config);
  CHECK(r.theta_hat == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fair coin treatment gives propensities near one half") {
  std::mt19937_64 gen(2);
  const int n = 4000;
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = testing::random_uniform(gen, 0, 1) < 0.5 ? 1.0 : 0.0;
  const Eigen::MatrixXd z = testing::random_matrix(gen, n, 3);
  const Dataset data = validate_dataset(testing::random_vector(gen, n), d, z);
  CrossfitConfig config;
  config.seed = 3;
  const NuisanceEstimates nu = fit_nuisances(data, make_partition(n, 5, 3), 0, config);
  CHECK(std::abs(nu.m_bar - 0.5) <= 0.05);
  CHECK((nu.m_hat.array() - 0.5).abs().maxCoeff() <= 0.05);
}

TEST_CASE("training complement without a treated arm is an error with its fold") {
  // Fold 1 holds every treated row, so its complement has none.
  const Eigen::VectorXd d = vec({0, 0, 0, 1, 1, 1, 0, 0, 0});
  const Dataset data = validate_dataset(vec({1, 2, 3, 4, 5, 6, 7, 8, 9}), d, Eigen::MatrixXd::Random(9, 1));
  const FoldPartition part = FoldPartition::from_assignments({0, 0, 0, 1, 1, 1, 2, 2, 2}, 3, 0);
  const CrossfitConfig config = linear_config(ScoreKind::ATE, 3, 0);
  try {
    crossfit_estimate(data, part, config);
    FAIL("expected ArmMissingInTrainingFold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArmMissingInTrainingFold);
    REQUIRE(e.fold().has_value());
    CHECK(*e.fold() == 1);
  }
}

TEST_CASE("unit-magnitude scores give unit variance and the reference interval") {
  // m = 1/2 and g = 0: treated rows score 2Y, untreated rows score -2Y.
  const std::size_t n = 100;
  Eigen::VectorXd y(n), d(n);
  std::vector<Index> assign(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[Eigen::Index(i)] = i % 2 == 0 ? 1.0 : 0.0;
    const double sign = (i / 2) % 2 == 0 ? 1.0 : -1.0;
    y[Eigen::Index(i)] = d[Eigen::Index(i)] == 1.0 ? 0.5 * sign : -0.5 * sign;
    assign[i] = (i / 4) % 2;
  }
  const Dataset data = validate_dataset(y, d, Eigen::MatrixXd(n, 0));
  const FoldPartition part = FoldPartition::from_assignments(assign, 2, 0);
  const NuisanceProvider provider = [](const Dataset&, const FoldPartition& p, std::size_t k) {
    const auto size = static_cast<Eigen::Index>(p.fold_size(k));
    NuisanceEstimates nu;
    nu.g0_hat = Eigen::VectorXd::Zero(size);
    nu.g1_hat = Eigen::VectorXd::Zero(size);
    nu.m_hat = Eigen::VectorXd::Constant(size, 0.5);
    nu.m_bar = 0.5;
    return nu;
  };
  const CrossfitRun run = crossfit_run(data, part, linear_config(ScoreKind::ATE, 2, 0), provider);
  CHECK(run.psi.cwiseAbs().minCoeff() == 1.0);
  CHECK(run.psi.cwiseAbs().maxCoeff() == 1.0);
  CHECK(run.report.theta_hat == 0.0);
  CHECK(run.report.sigma_hat == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(run.report.ci_lo + 0.19600) <= 1e-5);
  CHECK(std::abs(run.report.ci_hi - 0.19600) <= 1e-5);
}

TEST_CASE("estimate is the mean of fold roots and variance uses the final estimate") {
  DgpSpec spec;
  spec.effect_heterogeneity = 0.7;
  const SyntheticSample s = generate(spec, 800, 4);
  for (ScoreKind kind : {ScoreKind::ATE, ScoreKind::ATTE, ScoreKind::PLM}) {
    CrossfitConfig config = linear_config(kind, 4, 9);
    const FoldPartition part = make_partition(800, 4, 9);
    const CrossfitRun run = crossfit_run(s.data, part, config, [&](const Dataset& ds, const FoldPartition& p, std::size_t k) {
      return fit_nuisances(ds, p, k, config);
    });
    const auto& r = run.report;
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const IndexList rows = part.fold(k);
      const NuisanceEstimates nu = fit_nuisances(s.data, part, k, config);
      const double root = solve_theta(kind, select_rows(s.data.outcomes(), rows), select_rows(s.data.treatments(), rows), nu);
      CHECK(r.per_fold[k].theta == root);
      CHECK(std::abs(score_values(kind, select_rows(s.data.outcomes(), rows), select_rows(s.data.treatments(), rows), nu, root).mean()) <= 1e-10);
      sum += root;
    }
    CHECK(r.theta_hat == sum / 4.0);
    double var = run.psi.squaredNorm() / 800.0;
    if (kind == ScoreKind::PLM) {
      const double j = (s.data.treatments() - run.nuisances.m_hat).squaredNorm() / 800.0;
      var /= j * j;
    }
    CHECK(r.sigma_hat == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
    const double half = normal_quantile(0.975) * r.sigma_hat / std::sqrt(800.0);
    CHECK(std::abs(r.half_width() - half) <= 1e-12 * half);
    CHECK(r.ci_hi - r.theta_hat == doctest::Approx(r.theta_hat - r.ci_lo).epsilon(1e-12));
    CHECK(r.sigma_hat > 0.0);
  }
}

TEST_CASE("permuting rows with their fold labels leaves the estimate unchanged") {
  DgpSpec spec;
  const SyntheticSample s = generate(spec, 500, 6);
  const FoldPartition part = make_partition(500, 5, 13);
  const CrossfitConfig config = linear_config(ScoreKind::ATE, 5, 13);
  const EstimateReport base = crossfit_estimate(s.data, part, config);

  std::vector<Index> perm(500);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 gen(7);
  std::shuffle(perm.begin(), perm.end(), gen);
  const Dataset shuffled = validate_dataset(select_rows(s.data.outcomes(), perm), select_rows(s.data.treatments(), perm),
                                            select_rows(s.data.covariates(), perm));
  std::vector<Index> assign(500);
  for (std::size_t i = 0; i < 500; ++i) assign[i] = part.assignments()[perm[i]];
  const EstimateReport moved = crossfit_estimate(shuffled, FoldPartition::from_assignments(assign, 5, 13), config);
  CHECK(std::abs(moved.theta_hat - base.theta_hat) <= 1e-12);
  CHECK(std::abs(moved.sigma_hat - base.sigma_hat) <= 1e-12);
}

TEST_CASE("two and five folds agree within four combined standard errors") {
  DgpSpec spec;
  spec.effect_heterogeneity = 0.5;
  const SyntheticSample s = generate(spec, 2000, 8);
  const EstimateReport k2 = crossfit_estimate(s.data, linear_config(ScoreKind::ATE, 2, 1));
  const EstimateReport k5 = crossfit_estimate(s.data, linear_config(ScoreKind::ATE, 5, 1));
  const double se = std::hypot(k2.sigma_hat, k5.sigma_hat) / std::sqrt(2000.0);
  CHECK(std::abs(k2.theta_hat - k5.theta_hat) <= 4.0 * se);
}

TEST_CASE("interval width shrinks at the root-N rate") {
  DgpSpec spec;
  double w1 = 0.0, w4 = 0.0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    w1 += crossfit_estimate(generate(spec, 1000, derive_seed(50, rep)).data, linear_config(ScoreKind::ATE, 5, rep)).half_width();
    w4 += crossfit_estimate(generate(spec, 4000, derive_seed(51, rep)).data, linear_config(ScoreKind::ATE, 5, rep)).half_width();
  }
  const double ratio = w4 / w1;
  CHECK(ratio >= 0.45);
  CHECK(ratio <= 0.55);
}

TEST_CASE("true nuisances keep the estimate within three standard errors") {
  DgpSpec spec;
  spec.effect_heterogeneity = 0.5;
  const std::size_t n = 10000;
  int inside = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const SyntheticSample s = generate(spec, n, derive_seed(77, rep));
    CrossfitConfig config = linear_config(ScoreKind::ATE, 5, rep);
    const EstimateReport r = crossfit_estimate(s.data, make_partition(n, 5, rep), config, truth_provider(s.truth));
    if (std::abs(r.theta_hat - s.theta0_ate) <= 3.0 * r.sigma_hat / std::sqrt(double(n))) ++inside;
  }
  CHECK(inside >= 198);
}

TEST_CASE("OracleLinear learners keep the estimate within three standard errors") {
  DgpSpec spec;
  const std::size_t n = 10000;
  int inside = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const SyntheticSample s = generate(spec, n, derive_seed(78, rep));
    const EstimateReport r = crossfit_estimate(s.data, linear_config(ScoreKind::ATE, 5, rep));
    if (std::abs(r.theta_hat - spec.effect) <= 3.0 * r.sigma_hat / std::sqrt(double(n))) ++inside;
  }
  CHECK(inside >= 198);
}

TEST_CASE("worker count does not change the report") {
  DgpSpec spec;
  const SyntheticSample s = generate(spec, 600, 10);
  CrossfitConfig config;
  config.seed = 21;
  set_max_workers(1);
  const EstimateReport a = crossfit_estimate(s.data, config);
  set_max_workers(4);
  const EstimateReport b = crossfit_estimate(s.data, config);
  set_max_workers(1);
  CHECK(a.theta_hat == b.theta_hat);
  CHECK(a.sigma_hat == b.sigma_hat);
  CHECK(a.ci_lo == b.ci_lo);
}

TEST_CASE("PLM recovers a constant effect") {
  DgpSpec spec;
  spec.effect = 2.0;
  const SyntheticSample s = generate(spec, 5000, 11);
  const EstimateReport r = crossfit_estimate(s.data, linear_config(ScoreKind::PLM, 5, 2));
  CHECK(std::abs(r.theta_hat - 2.0) <= 4.0 * r.sigma_hat / std::sqrt(5000.0));
}

TEST_CASE("configuration validation") {
  CrossfitConfig c;
  c.folds = 1;
  CHECK_THROWS_AS(validate(c), Error);
  c = CrossfitConfig{};
  c.trim_lo = 0.5;
  c.trim_hi = 0.4;
  CHECK_THROWS_AS(validate(c), Error);
  c = CrossfitConfig{};
  c.alpha = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
  c = CrossfitConfig{};
  c.learner_g.params["bogus"] = 1.0;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("provider returning the wrong length is rejected") {
  DgpSpec spec;
  const SyntheticSample s = generate(spec, 100, 12);
  const NuisanceProvider bad = [](const Dataset&, const FoldPartition&, std::size_t) {
    NuisanceEstimates nu;
    nu.m_hat = Eigen::VectorXd::Constant(3, 0.5);
    return nu;
  };
  try {
    crossfit_estimate(s.data, make_partition(100, 2, 0), linear_config(ScoreKind::ATE, 2, 0), bad);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(e.fold() == std::optional<std::size_t>(0));
  }
}
