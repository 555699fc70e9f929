#include <doctest.h>

#include <cmath>

#include "dml/error.hpp"
#include "dml/scores.hpp"
#include "dml/simulation.hpp"
#include "test_support.hpp"

using namespace dml;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected dml::Error");
  return ErrorCode::InvalidArgument;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

struct RandomFold {
  Eigen::VectorXd y, d;
  NuisanceEstimates nu;
};

RandomFold random_fold(std::mt19937_64& gen, int n) {
  RandomFold f;
  f.y = testing::random_vector(gen, n);
  f.d = testing::random_binary(gen, n);
  f.nu.g0_hat = testing::random_vector(gen, n);
  f.nu.g1_hat = testing::random_vector(gen, n);
  f.nu.l_hat = testing::random_vector(gen, n);
  f.nu.m_hat.resize(n);
  for (int i = 0; i < n; ++i) f.nu.m_hat[i] = testing::random_uniform(gen, 0.05, 0.95);
  f.nu.m_bar = testing::random_uniform(gen, 0.2, 0.8);
  return f;
}

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

}  // namespace

TEST_CASE("ATE score reference values") {
  CHECK(ate_score(1, 1, 0, 1, 0.5, 1) == 0.0);
  CHECK(ate_score(2, 1, 0, 1, 0.5, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ate_score(0, 0, 1, 1, 0.5, 0) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("ATTE score reference values") {
  CHECK(atte_score(0.7, 1, 0.7, 0.4, 0.3, 0) == 0.0);
  CHECK(atte_score(2, 1, 1, 0.5, 0.5, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(atte_score(2, 0, 1, 0.25, 0.5, 0) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("PLM score value") {
  CHECK(plm_score(3, 1, 1, 0.25, 2) == doctest::Approx((3 - 1 - 2 * 0.75) * 0.75).epsilon(1e-15));
}

TEST_CASE("scores reject propensities outside the open unit interval") {
  CHECK(code_of([] { ate_score(1, 1, 0, 1, 0.0, 0); }) == ErrorCode::PropensityOutOfRange);
  CHECK(code_of([] { ate_score(1, 1, 0, 1, 1.0, 0); }) == ErrorCode::PropensityOutOfRange);
  CHECK(code_of([] { atte_score(1, 1, 0, 0.5, 1.2, 0); }) == ErrorCode::PropensityOutOfRange);
}

TEST_CASE("ATE score slope in theta is exactly minus one") {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 1000; ++i) {
    const double y = testing::random_uniform(gen, -5, 5), g0 = testing::random_uniform(gen, -5, 5);
    const double g1 = testing::random_uniform(gen, -5, 5), m = testing::random_uniform(gen, 0.01, 0.99);
    const double d = i % 2, theta = testing::random_uniform(gen, -3, 3), c = testing::random_uniform(gen, -3, 3);
    const double base = ate_score(y, d, g0, g1, m, 0.0);
    // Exact when theta enters as a single final subtraction.
    CHECK(ate_score(y, d, g0, g1, m, theta) == base - theta);
    CHECK(ate_score(y, d, g0, g1, m, theta + c) == doctest::Approx(ate_score(y, d, g0, g1, m, theta) - c).epsilon(1e-14));
  }
}

TEST_CASE("vectorized scores agree with the scalar formulas") {
  std::mt19937_64 gen(2);
  const RandomFold f = random_fold(gen, 50);
  const Eigen::VectorXd ate = score_values(ScoreKind::ATE, f.y, f.d, f.nu, 0.4);
  const Eigen::VectorXd atte = score_values(ScoreKind::ATTE, f.y, f.d, f.nu, 0.4);
  const Eigen::VectorXd plm = score_values(ScoreKind::PLM, f.y, f.d, f.nu, 0.4);
  for (Eigen::Index i = 0; i < 50; ++i) {
    CHECK(ate[i] == doctest::Approx(ate_score(f.y[i], f.d[i], f.nu.g0_hat[i], f.nu.g1_hat[i], f.nu.m_hat[i], 0.4)).epsilon(1e-13));
    CHECK(atte[i] == doctest::Approx(atte_score(f.y[i], f.d[i], f.nu.g0_hat[i], f.nu.m_hat[i], f.nu.m_bar, 0.4)).epsilon(1e-13));
    CHECK(plm[i] == doctest::Approx(plm_score(f.y[i], f.d[i], f.nu.l_hat[i], f.nu.m_hat[i], 0.4)).epsilon(1e-13));
  }
}

TEST_CASE("solve_theta reference folds") {
  NuisanceEstimates nu;
  // Theta-free ATE parts 1 and 3: g1 - g0 with zero residuals on treated rows.
  nu.g0_hat = vec({0, 0});
  nu.g1_hat = vec({1, 3});
  nu.m_hat = vec({0.5, 0.5});
  CHECK(solve_theta(ScoreKind::ATE, vec({1, 3}), vec({1, 1}), nu) == doctest::Approx(2.0).epsilon(1e-15));

  NuisanceEstimates atte;
  atte.g0_hat = vec({1, 1});
  atte.m_hat = vec({0.5, 0.5});
  atte.m_bar = 0.5;
  CHECK(std::abs(solve_theta(ScoreKind::ATTE, vec({2, 2}), vec({1, 0}), atte)) <= 1e-15);
}

TEST_CASE("roots zero the mean score for every kind") {
  std::mt19937_64 gen(3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const RandomFold f = random_fold(gen, testing::random_int(gen, 2, 300));
    for (ScoreKind kind : {ScoreKind::ATE, ScoreKind::ATTE, ScoreKind::PLM}) {
      const double theta = solve_theta(kind, f.y, f.d, f.nu);
      worst = std::max(worst, std::abs(score_values(kind, f.y, f.d, f.nu, theta).mean()));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("ATTE root does not depend on m_bar") {
  std::mt19937_64 gen(4);
  RandomFold f = random_fold(gen, 40);
  const double a = solve_theta(ScoreKind::ATTE, f.y, f.d, f.nu);
  f.nu.m_bar = 0.9;
  CHECK(solve_theta(ScoreKind::ATTE, f.y, f.d, f.nu) == doctest::Approx(a).epsilon(1e-13));
}

TEST_CASE("solve_theta error paths") {
  NuisanceEstimates nu;
  nu.g0_hat = vec({0, 0});
  nu.g1_hat = vec({0, 0});
  nu.l_hat = vec({0, 0});
  nu.m_hat = vec({0.5, 0.5});
  nu.m_bar = 0.5;
  CHECK(code_of([&] { solve_theta(ScoreKind::ATTE, vec({1, 2}), vec({0, 0}), nu); }) == ErrorCode::NoTreatedInFold);
  NuisanceEstimates degenerate = nu;
  degenerate.m_hat = vec({0.5, 0.5});
  CHECK(code_of([&] { solve_theta(ScoreKind::PLM, vec({1, 2}), vec({0.5, 0.5}), degenerate); }) ==
        ErrorCode::DegenerateResidualVariance);
  CHECK(code_of([&] { solve_theta(ScoreKind::ATE, Eigen::VectorXd(0), Eigen::VectorXd(0), NuisanceEstimates{}); }) ==
        ErrorCode::InsufficientData);
  CHECK(code_of([&] { solve_theta(ScoreKind::ATE, vec({1, 2, 3}), vec({0, 1, 0}), nu); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("propensity trimming clamps and counts") {
  TrimResult r = trim_propensity(vec({0.005, 0.5, 0.999}), 0.01, 0.99);
  CHECK(r.values == vec({0.01, 0.5, 0.99}));
  CHECK(r.count == 2);
  r = trim_propensity(vec({0.2, 0.3}), 0.01, 0.99);
  CHECK(r.values == vec({0.2, 0.3}));
  CHECK(r.count == 0);
  r = trim_propensity(Eigen::VectorXd(0), 0.01, 0.99);
  CHECK(r.values.size() == 0);
  CHECK(r.count == 0);
  CHECK(code_of([] { trim_propensity(vec({0.5}), 0.0, 0.99); }) == ErrorCode::InvalidCutoffs);
  CHECK(code_of([] { trim_propensity(vec({0.5}), 0.5, 0.5); }) == ErrorCode::InvalidCutoffs);
  CHECK(code_of([] { trim_propensity(vec({0.5}), 0.2, 1.0); }) == ErrorCode::InvalidCutoffs);
}

TEST_CASE("score kind names round trip") {
  for (ScoreKind k : {ScoreKind::ATE, ScoreKind::ATTE, ScoreKind::PLM}) CHECK(score_kind_from_string(to_string(k)) == k);
  CHECK(score_kind_from_string("atte") == ScoreKind::ATTE);
  CHECK_THROWS_AS(score_kind_from_string("late"), Error);
}

TEST_CASE("Gateaux derivative along a zero direction is zero") {
  std::mt19937_64 gen(5);
  const RandomFold f = random_fold(gen, 100);
  Perturbation zero;
  zero.dg1 = Eigen::VectorXd::Zero(100);
  const GateauxResult r = gateaux_derivative(ScoreKind::ATE, f.y, f.d, f.nu, 0.0, zero);
  CHECK(r.derivative == 0.0);
  CHECK(r.richardson == 0.0);
  CHECK(gateaux_derivative(ScoreKind::ATE, f.y, f.d, f.nu, 0.0, Perturbation{}).derivative == 0.0);
}

TEST_CASE("naive score has unit derivative along g1") {
  std::mt19937_64 gen(6);
  const RandomFold f = random_fold(gen, 1000);
  Perturbation h;
  h.dg1 = ones(1000);
  const GateauxResult r = gateaux_derivative(naive_ate_score_function(), f.y, f.d, f.nu, 0.0, h);
  CHECK(std::abs(r.derivative - 1.0) <= 1e-9);
  CHECK(std::abs(r.richardson - 1.0) <= 1e-9);
}

TEST_CASE("Gateaux step and range errors") {
  std::mt19937_64 gen(7);
  const RandomFold f = random_fold(gen, 20);
  Perturbation h;
  h.dm = ones(20);
  CHECK(code_of([&] { gateaux_derivative(ScoreKind::ATE, f.y, f.d, f.nu, 0.0, h, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { gateaux_derivative(ScoreKind::ATE, f.y, f.d, f.nu, 0.0, h, 0.2); }) == ErrorCode::InvalidArgument);
  h.dm = ones(20) * 20.0;
  CHECK(code_of([&] { gateaux_derivative(ScoreKind::ATE, f.y, f.d, f.nu, 0.0, h, 0.05); }) ==
        ErrorCode::PerturbationEscapesRange);
}

TEST_CASE("scores at the truth are orthogonal and mean zero on a large sample") {
  DgpSpec spec;
  spec.effect_heterogeneity = 0.5;
  // Propensity-direction Monte Carlo error scales with noise_sd; at 0.1 it is about 0.005.
  spec.noise_sd = 0.1;
  const std::size_t n = 100000;
  const SyntheticSample s = generate(spec, n, 99);
  const Eigen::VectorXd& y = s.data.outcomes();
  const Eigen::VectorXd& d = s.data.treatments();
  const Eigen::VectorXd u = ones(static_cast<Eigen::Index>(n));
  for (ScoreKind kind : {ScoreKind::ATE, ScoreKind::ATTE}) {
    const double theta0 = target_parameter(spec, kind);
    const Eigen::VectorXd psi = score_values(kind, y, d, s.truth, theta0);
    const double sd = std::sqrt((psi.array() - psi.mean()).square().mean());
    CHECK(std::abs(psi.mean()) <= 3.0 * sd / std::sqrt(double(n)));
    // Effect heterogeneity alone contributes variance 0.25 to the ATE score.
    CHECK(psi.squaredNorm() / double(n) >= 0.01);
    for (int which = 0; which < 3; ++which) {
      Perturbation h;
      (which == 0 ? h.dg0 : which == 1 ? h.dg1 : h.dm) = u;
      CAPTURE(to_string(kind));
      CAPTURE(which);
      CHECK(std::abs(gateaux_derivative(kind, y, d, s.truth, theta0, h).derivative) <= 0.02);
    }
  }
  Perturbation h;
  h.dg1 = u;
  CHECK(std::abs(gateaux_derivative(naive_ate_score_function(), y, d, s.truth, s.theta0_ate, h).derivative - 1.0) <= 1e-9);
}
