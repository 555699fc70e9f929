#include "dml/learners/linear.hpp"

#include <cmath>
#include <memory>

#include "dml/error.hpp"

namespace dml {
namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

class LinearModel final : public Model {
 public:
  explicit LinearModel(LinearFit fit) : fit_(std::move(fit)) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override { return fit_.predict(x); }

 private:
  LinearFit fit_;
};

}  // namespace

Eigen::VectorXd LinearFit::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(x.rows(), coefficients[0]);
  if (x.cols() > 0) eta.noalias() += x * coefficients.tail(x.cols());
  if (!logistic) return eta;
  return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

LinearFit fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() < x.cols() + 1) {
    throw Error(ErrorCode::InsufficientData, "least squares needs more rows than parameters");
  }
  const Eigen::MatrixXd design = with_intercept(x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorCode::SingularDesign, "design matrix has rank " + std::to_string(qr.rank()) +
                                               " < " + std::to_string(design.cols()));
  }
  LinearFit fit;
  fit.coefficients = qr.solve(y);
  return fit;
}

LinearFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t max_iter,
                       double tol) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() < x.cols() + 1) {
    throw Error(ErrorCode::InsufficientData, "logistic regression needs more rows than parameters");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::InvalidArgument, "logistic needs y in {0,1}");
  }
  const Eigen::MatrixXd design = with_intercept(x);
  const Eigen::Index k = design.cols();

  LinearFit fit;
  fit.logistic = true;
  fit.coefficients = Eigen::VectorXd::Zero(k);
  const double ybar = y.mean();
  if (ybar == 0.0 || ybar == 1.0) {
    fit.coefficients[0] = ybar == 0.0 ? -30.0 : 30.0;
    return fit;
  }
  fit.coefficients[0] = std::log(ybar / (1.0 - ybar));

  auto deviance = [&](const Eigen::VectorXd& beta) {
    const Eigen::ArrayXd eta = (design * beta).array();
    const Eigen::ArrayXd softplus = eta.max(0.0) + (-eta.abs()).exp().log1p();
    return (softplus - y.array() * eta).sum();
  };

  double current = deviance(fit.coefficients);
  for (std::size_t it = 0; it < max_iter; ++it) {
    fit.iterations = it + 1;
    const Eigen::ArrayXd prob = 1.0 / (1.0 + (-(design * fit.coefficients).array()).exp());
    const Eigen::VectorXd grad = design.transpose() * (y.array() - prob).matrix();
    const Eigen::VectorXd w = (prob * (1.0 - prob)).max(1e-12).matrix();
    const Eigen::MatrixXd hessian = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
      throw Error(ErrorCode::SingularDesign, "logistic Hessian is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double scale = 1.0;
    Eigen::VectorXd candidate = fit.coefficients + step;
    double next = deviance(candidate);
    // Near the optimum the deviance change falls below its rounding error; accept such steps.
    const double slack = 1e-12 * (1.0 + std::abs(current));
    while (next > current + slack && scale > 1e-8) {
      scale *= 0.5;
      candidate = fit.coefficients + scale * step;
      next = deviance(candidate);
    }
    fit.coefficients = candidate;
    const double change = (scale * step).lpNorm<Eigen::Infinity>();
    current = next;
    if (change < tol) break;
  }
  return fit;
}

FittedModel fit_linear_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y) {
  LinearFit fit = spec.task == Task::Regression ? fit_ols(x, y) : fit_logistic(x, y);
  TrainingDiagnostics diag;
  diag.tuning["iterations"] = static_cast<double>(fit.iterations);
  auto model = std::make_shared<LinearModel>(std::move(fit));
  diag.in_sample_mse = mean_squared_error(y, model->predict(x));
  return FittedModel(std::move(model), spec.task, static_cast<std::size_t>(x.cols()), std::move(diag));
}

}  // namespace dml
