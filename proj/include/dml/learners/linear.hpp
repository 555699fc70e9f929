#pragma once

#include <Eigen/Dense>

#include "dml/learners/learner.hpp"

namespace dml {

/// Unpenalized linear fit with intercept: coefficients[0] is the intercept.
struct LinearFit {
  Eigen::VectorXd coefficients;
  bool logistic = false;
  std::size_t iterations = 0;

  /// Linear predictor for least squares, probability for logistic.
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Ordinary least squares via column-pivoted QR. Throws SingularDesign if the
/// design [1, x] is rank deficient.
LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Logistic maximum likelihood by Newton-Raphson with step halving.
LinearFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       std::size_t max_iter = 100, double tol = 1e-10);

/// Learner entry point for LearnerKind::OracleLinear.
FittedModel fit_linear_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y);

}  // namespace dml
