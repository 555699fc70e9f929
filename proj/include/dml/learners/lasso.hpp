#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "dml/learners/learner.hpp"

namespace dml {

struct LassoOptions {
  std::size_t max_sweeps = 10000;
  /// Coordinate descent stops once the KKT residual falls below this.
  double tol = 1e-10;
  /// A fit that ends above this KKT residual raises NoConvergence.
  double accept_tol = 1e-7;
};

/// Gaussian lasso fit. The penalty applies to the coefficients of internally
/// standardized features (zero mean, unit population variance); the intercept
/// is unpenalized. Tolerances are scaled by max(1, sd(y)).
struct LassoFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;               // original feature scale
  Eigen::VectorXd coef_standardized;  // scale the penalty acts on
  Eigen::VectorXd center;
  Eigen::VectorXd scale;              // 0 marks a constant column (coefficient pinned at 0)
  double lambda = 0.0;
  std::size_t sweeps = 0;
  double kkt_residual = 0.0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

/// Minimizes (1/2n)||y - b0 - Xs b||^2 + lambda ||b||_1 by cyclic coordinate
/// descent with active-set cycling. Throws NoConvergence.
LassoFit fit_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                        const LassoOptions& options = {});

/// Largest |(1/n) Xs_j'(y - ybar)| over standardized columns: the smallest
/// lambda at which every coefficient is zero.
double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Plug-in penalty c * sigma * qnorm(1 - gamma / (2p)) / sqrt(n).
double plugin_penalty(std::size_t n, std::size_t p, double sigma, double c, double gamma);

/// Lasso with the plug-in penalty: sigma starts at sd(y) and is re-estimated
/// from the residuals twice, refitting each time.
LassoFit fit_lasso_plugin(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c = 1.1,
                          double gamma = 0.1, const LassoOptions& options = {});

/// l1-penalized logistic regression on standardized features:
/// (1/n) sum[log(1 + e^eta) - y eta] + lambda ||b||_1, solved by accelerated
/// proximal gradient with adaptive restart.
struct LogisticLassoFit {
  double intercept = 0.0;
  Eigen::VectorXd coef_standardized;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
  double lambda = 0.0;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;

  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
};

LogisticLassoFit fit_logistic_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    double lambda, std::size_t max_iter = 20000,
                                    double tol = 1e-7);

/// Plug-in penalty for the logistic loss, c * qnorm(1 - gamma / (2p)) / (2 sqrt(n)),
/// using 1/2 as the bound on the Bernoulli residual standard deviation.
double logistic_plugin_penalty(std::size_t n, std::size_t p, double c, double gamma);

/// Appends all squares and pairwise products of the columns of x.
Eigen::MatrixXd second_order_expansion(const Eigen::MatrixXd& x);

/// Learner entry point for LearnerKind::Lasso.
FittedModel fit_lasso_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y);

}  // namespace dml
