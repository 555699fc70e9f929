#include <doctest.h>

#include <cmath>

#include "dml/error.hpp"
#include "dml/learners/learner.hpp"
#include "dml/learners/linear.hpp"
#include "test_support.hpp"

using namespace dml;

TEST_CASE("least squares solves the normal equations") {
  std::mt19937_64 gen(1);
  const Eigen::MatrixXd x = testing::random_matrix(gen, 60, 4);
  const Eigen::VectorXd y = testing::random_vector(gen, 60);
  const LinearFit fit = fit_ols(x, y);
  Eigen::MatrixXd design(60, 5);
  design << Eigen::VectorXd::Ones(60), x;
  const Eigen::VectorXd normal = design.transpose() * (y - design * fit.coefficients);
  CHECK(normal.lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("least squares is exact on noiseless data") {
  std::mt19937_64 gen(2);
  const Eigen::MatrixXd x = testing::random_matrix(gen, 30, 3);
  const Eigen::VectorXd y = (1.0 + 2.0 * x.col(0).array() - 0.5 * x.col(2).array()).matrix();
  const LinearFit fit = fit_ols(x, y);
  CHECK(fit.coefficients[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(fit.coefficients[2]) <= 1e-12);
  CHECK(fit.predict(x).isApprox(y, 1e-12));
}

TEST_CASE("logistic regression zeroes the score") {
  std::mt19937_64 gen(3);
  const Eigen::MatrixXd x = testing::random_matrix(gen, 400, 3);
  Eigen::VectorXd y(400);
  for (int i = 0; i < 400; ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-(0.3 + x(i, 0) - x(i, 1))));
    y[i] = testing::random_uniform(gen, 0.0, 1.0) < prob ? 1.0 : 0.0;
  }
  const LinearFit fit = fit_logistic(x, y);
  Eigen::MatrixXd design(400, 4);
  design << Eigen::VectorXd::Ones(400), x;
  const Eigen::VectorXd score = design.transpose() * (y - fit.predict(x));
  CHECK(score.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(fit.coefficients[1] > 0.6);
  CHECK(fit.coefficients[2] < -0.6);
}

TEST_CASE("collinear design is singular") {
  std::mt19937_64 gen(4);
  Eigen::MatrixXd x = testing::random_matrix(gen, 20, 3);
  x.col(2) = x.col(0) - 2.0 * x.col(1);
  try {
    fit_ols(x, testing::random_vector(gen, 20));
    FAIL("expected SingularDesign");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularDesign);
  }
}

TEST_CASE("too few rows is insufficient data") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 3);
  CHECK_THROWS_AS(fit_ols(x, Eigen::VectorXd::Ones(3)), Error);
}

TEST_CASE("oracle linear learner clamps probabilities") {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd x = testing::random_matrix(gen, 100, 2);
  const Eigen::VectorXd d = testing::random_binary(gen, 100);
  LearnerSpec spec;
  spec.kind = LearnerKind::OracleLinear;
  spec.task = Task::Probability;
  const Eigen::VectorXd m = fit(spec, x, d, 0).predict(x);
  CHECK(m.minCoeff() > 0.0);
  CHECK(m.maxCoeff() < 1.0);
}
