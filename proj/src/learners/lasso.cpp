#include "dml/learners/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "dml/error.hpp"
#include "dml/learners/linear.hpp"
#include "dml/normal.hpp"

namespace dml {
namespace {

struct Standardized {
  Eigen::MatrixXd xs;
  Eigen::VectorXd center;
  Eigen::VectorXd scale;
};

Standardized standardize(const Eigen::MatrixXd& x) {
  const double n = static_cast<double>(x.rows());
  Standardized s;
  s.xs = x;
  s.center = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    s.xs.col(j).array() -= s.center[j];
    const double sd = std::sqrt(s.xs.col(j).squaredNorm() / n);
    if (sd <= 1e-12 * (1.0 + std::abs(s.center[j]))) {
      s.scale[j] = 0.0;
      s.xs.col(j).setZero();
    } else {
      s.scale[j] = sd;
      s.xs.col(j) /= sd;
    }
  }
  return s;
}

Eigen::VectorXd apply_standardization(const Eigen::MatrixXd& x, const Eigen::VectorXd& center,
                                      const Eigen::VectorXd& scale, const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (scale[j] == 0.0 || beta[j] == 0.0) continue;
    eta += (beta[j] / scale[j]) * (x.col(j).array() - center[j]).matrix();
  }
  return eta;
}

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double population_sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

// Max KKT violation for the penalized least-squares problem on standardized columns.
double gaussian_kkt(const Eigen::MatrixXd& xs, const Eigen::VectorXd& scale,
                    const Eigen::VectorXd& residual, const Eigen::VectorXd& beta, double lambda) {
  const double n = static_cast<double>(xs.rows());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    if (scale[j] == 0.0) continue;
    const double g = xs.col(j).dot(residual) / n;
    const double v = beta[j] == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                    : std::abs(g - lambda * (beta[j] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoFit solve_standardized(const Standardized& s, const Eigen::VectorXd& y, double lambda,
                            const Eigen::VectorXd& warm_start, const LassoOptions& options) {
  const Eigen::Index n = s.xs.rows();
  const Eigen::Index p = s.xs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double ybar = y.mean();
  const Eigen::VectorXd yc = y.array() - ybar;
  const double tol_scale = std::max(1.0, population_sd(y));
  const double tol = options.tol * tol_scale;

  Eigen::VectorXd beta = warm_start.size() == p ? warm_start : Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (s.scale[j] == 0.0) beta[j] = 0.0;
  }
  Eigen::VectorXd r = yc - s.xs * beta;

  auto update = [&](Eigen::Index j) {
    const double old = beta[j];
    const double z = old + s.xs.col(j).dot(r) * inv_n;
    const double fresh = soft_threshold(z, lambda);
    if (fresh != old) {
      r.noalias() -= (fresh - old) * s.xs.col(j);
      beta[j] = fresh;
    }
    return std::abs(fresh - old);
  };

  std::size_t sweeps = 0;
  double kkt = 0.0;
  std::vector<Eigen::Index> active;
  while (true) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.scale[j] != 0.0) update(j);
    }
    ++sweeps;

    active.clear();
    for (Eigen::Index j = 0; j < p; ++j) {
      if (beta[j] != 0.0) active.push_back(j);
    }
    while (!active.empty() && sweeps < options.max_sweeps) {
      double delta = 0.0;
      for (Eigen::Index j : active) delta = std::max(delta, update(j));
      ++sweeps;
      if (delta < 0.1 * tol) break;
    }

    r = yc - s.xs * beta;  // drop accumulated rounding before checking optimality
    kkt = gaussian_kkt(s.xs, s.scale, r, beta, lambda);
    if (kkt <= tol || sweeps >= options.max_sweeps) break;
  }
  if (kkt > options.accept_tol * tol_scale) {
    throw Error(ErrorCode::NoConvergence, "lasso KKT residual " + std::to_string(kkt) + " after " +
                                              std::to_string(sweeps) + " sweeps");
  }

  LassoFit fit;
  fit.coef_standardized = beta;
  fit.center = s.center;
  fit.scale = s.scale;
  fit.coef = Eigen::VectorXd::Zero(p);
  fit.intercept = ybar;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (s.scale[j] == 0.0) continue;
    fit.coef[j] = beta[j] / s.scale[j];
    fit.intercept -= fit.coef[j] * s.center[j];
  }
  fit.lambda = lambda;
  fit.sweeps = sweeps;
  fit.kkt_residual = kkt / tol_scale;
  return fit;
}

void check_training_input(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (x.rows() < 2) throw Error(ErrorCode::InsufficientData, "lasso needs at least 2 rows");
}

class LassoModel final : public Model {
 public:
  LassoModel(LassoFit fit, bool expand) : fit_(std::move(fit)), expand_(expand) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return expand_ ? fit_.predict(second_order_expansion(x)) : fit_.predict(x);
  }

 private:
  LassoFit fit_;
  bool expand_;
};

class LogisticLassoModel final : public Model {
 public:
  LogisticLassoModel(LogisticLassoFit fit, bool expand) : fit_(std::move(fit)), expand_(expand) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return expand_ ? fit_.predict_proba(second_order_expansion(x)) : fit_.predict_proba(x);
  }

 private:
  LogisticLassoFit fit_;
  bool expand_;
};

// Unpenalized refit on the columns the penalized fit selected.
class PostLassoModel final : public Model {
 public:
  PostLassoModel(std::vector<Eigen::Index> support, LinearFit fit, bool expand)
      : support_(std::move(support)), fit_(std::move(fit)), expand_(expand) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    const Eigen::MatrixXd features = expand_ ? second_order_expansion(x) : x;
    Eigen::MatrixXd selected(features.rows(), static_cast<Eigen::Index>(support_.size()));
    for (std::size_t j = 0; j < support_.size(); ++j) {
      selected.col(static_cast<Eigen::Index>(j)) = features.col(support_[j]);
    }
    return fit_.predict(selected);
  }

 private:
  std::vector<Eigen::Index> support_;
  LinearFit fit_;
  bool expand_;
};

std::vector<Eigen::Index> support_of(const Eigen::VectorXd& coef) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (coef[j] != 0.0) out.push_back(j);
  }
  return out;
}

// Null when the refit is not identified (support too large or separation).
std::shared_ptr<const Model> refit_on_support(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& coef, bool logistic, bool expand) {
  std::vector<Eigen::Index> support = support_of(coef);
  if (support.size() + 1 >= static_cast<std::size_t>(features.rows())) return nullptr;
  Eigen::MatrixXd selected(features.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) {
    selected.col(static_cast<Eigen::Index>(j)) = features.col(support[j]);
  }
  try {
    LinearFit fit = logistic ? fit_logistic(selected, y) : fit_ols(selected, y);
    if (!fit.coefficients.allFinite()) return nullptr;
    return std::make_shared<PostLassoModel>(std::move(support), std::move(fit), expand);
  } catch (const Error&) {
    return nullptr;
  }
}

}  // namespace

Eigen::VectorXd LassoFit::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), intercept);
  if (x.cols() > 0) out.noalias() += x * coef;
  return out;
}

LassoFit fit_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                        const LassoOptions& options) {
  check_training_input(x, y);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidHyperparameter, "lambda must be finite and >= 0");
  }
  return solve_standardized(standardize(x), y, lambda, {}, options);
}

double lasso_lambda_max(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  check_training_input(x, y);
  const Standardized s = standardize(x);
  const Eigen::VectorXd yc = y.array() - y.mean();
  double best = 0.0;
  for (Eigen::Index j = 0; j < s.xs.cols(); ++j) {
    best = std::max(best, std::abs(s.xs.col(j).dot(yc)) / static_cast<double>(x.rows()));
  }
  return best;
}

double plugin_penalty(std::size_t n, std::size_t p, double sigma, double c, double gamma) {
  const double q = normal_quantile(1.0 - gamma / (2.0 * static_cast<double>(std::max<std::size_t>(p, 1))));
  return c * sigma * q / std::sqrt(static_cast<double>(n));
}

LassoFit fit_lasso_plugin(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
                          double gamma, const LassoOptions& options) {
  check_training_input(x, y);
  const Standardized s = standardize(x);
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t p = static_cast<std::size_t>(x.cols());

  double sigma = population_sd(y);
  LassoFit fit;
  Eigen::VectorXd warm;
  for (int round = 0; round < 3; ++round) {
    fit = solve_standardized(s, y, plugin_penalty(n, p, sigma, c, gamma), warm, options);
    warm = fit.coef_standardized;
    if (round < 2) sigma = std::sqrt((y - fit.predict(x)).squaredNorm() / static_cast<double>(n));
  }
  return fit;
}

double logistic_plugin_penalty(std::size_t n, std::size_t p, double c, double gamma) {
  return plugin_penalty(n, p, 0.5, c, gamma);
}

Eigen::VectorXd LogisticLassoFit::predict_proba(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = (apply_standardization(x, center, scale, coef_standardized).array() + intercept).matrix();
  return (1.0 / (1.0 + (-eta.array()).exp())).matrix();
}

LogisticLassoFit fit_logistic_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    double lambda, std::size_t max_iter, double tol) {
  check_training_input(x, y);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) {
      throw Error(ErrorCode::InvalidArgument, "logistic lasso needs y in {0,1}");
    }
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidHyperparameter, "lambda must be finite and >= 0");
  }

  const Standardized s = standardize(x);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  LogisticLassoFit fit;
  fit.center = s.center;
  fit.scale = s.scale;
  fit.lambda = lambda;
  fit.coef_standardized = Eigen::VectorXd::Zero(p);

  const double ybar = y.mean();
  if (ybar == 0.0 || ybar == 1.0) {
    // Single-class training data: the intercept-only MLE is at infinity.
    fit.intercept = ybar == 0.0 ? -30.0 : 30.0;
    return fit;
  }

  auto loss = [&](double b0, const Eigen::VectorXd& b) {
    const Eigen::ArrayXd eta = (s.xs * b).array() + b0;
    // log(1 + e^eta) - y eta, evaluated stably
    const Eigen::ArrayXd softplus = eta.max(0.0) + (-eta.abs()).exp().log1p();
    return (softplus - y.array() * eta).sum() * inv_n;
  };
  auto gradient = [&](double b0, const Eigen::VectorXd& b, double& g0, Eigen::VectorXd& g) {
    const Eigen::ArrayXd eta = (s.xs * b).array() + b0;
    const Eigen::VectorXd resid = ((1.0 / (1.0 + (-eta).exp())) - y.array()).matrix();
    g0 = resid.sum() * inv_n;
    g.noalias() = s.xs.transpose() * resid * inv_n;
  };
  auto penalty = [&](const Eigen::VectorXd& b) { return lambda * b.lpNorm<1>(); };
  auto kkt = [&](double b0, const Eigen::VectorXd& b) {
    double g0;
    Eigen::VectorXd g(p);
    gradient(b0, b, g0, g);
    double worst = std::abs(g0);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (s.scale[j] == 0.0) continue;
      const double v = b[j] == 0.0 ? std::max(0.0, std::abs(g[j]) - lambda)
                                   : std::abs(g[j] + lambda * (b[j] > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    return worst;
  };

  // Lipschitz estimate for the smooth part: 0.25 * lambda_max([1 Xs]'[1 Xs] / n),
  // refined by backtracking below.
  double lip = 0.25;
  if (p > 0) {
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(p, 1.0, 2.0);
    double eig = 1.0;
    for (int it = 0; it < 30; ++it) {
      const Eigen::VectorXd w = s.xs.transpose() * (s.xs * v) * inv_n;
      eig = w.norm() / std::max(v.norm(), 1e-300);
      if (w.norm() == 0.0) break;
      v = w / w.norm();
    }
    lip = 0.25 * std::max(1.0, eig);
  }

  double b0 = std::log(ybar / (1.0 - ybar));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double z0 = b0;
  Eigen::VectorXd z = b;
  double t = 1.0;
  double objective = loss(b0, b) + penalty(b);
  double g0;
  Eigen::VectorXd g(p);

  std::size_t iter = 0;
  double residual = kkt(b0, b);
  while (residual > tol && iter < max_iter) {
    ++iter;
    gradient(z0, z, g0, g);
    const double fz = loss(z0, z);
    double nb0;
    Eigen::VectorXd nb(p);
    while (true) {
      nb0 = z0 - g0 / lip;
      for (Eigen::Index j = 0; j < p; ++j) {
        nb[j] = s.scale[j] == 0.0 ? 0.0 : soft_threshold(z[j] - g[j] / lip, lambda / lip);
      }
      const double d0 = nb0 - z0;
      const Eigen::VectorXd d = nb - z;
      const double bound = fz + g0 * d0 + g.dot(d) + 0.5 * lip * (d0 * d0 + d.squaredNorm());
      if (loss(nb0, nb) <= bound + 1e-15 * std::abs(bound)) break;
      lip *= 2.0;
    }
    const double fresh = loss(nb0, nb) + penalty(nb);
    if (fresh > objective && t > 1.0) {
      // Momentum overshoot: restart from the current iterate. A plain proximal
      // step (t == 1) is monotone up to rounding and is always taken.
      t = 1.0;
      z0 = b0;
      z = b;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double mom = (t - 1.0) / t_next;
    z0 = nb0 + mom * (nb0 - b0);
    z = nb + mom * (nb - b);
    b0 = nb0;
    b = nb;
    t = t_next;
    objective = fresh;
    if (iter % 10 == 0) residual = kkt(b0, b);
  }
  residual = kkt(b0, b);
  if (residual > 1e-5) {
    throw Error(ErrorCode::NoConvergence,
                "logistic lasso KKT residual " + std::to_string(residual) + " after " +
                    std::to_string(iter) + " iterations");
  }
  fit.intercept = b0;
  fit.coef_standardized = b;
  fit.iterations = iter;
  fit.kkt_residual = residual;
  return fit;
}

Eigen::MatrixXd second_order_expansion(const Eigen::MatrixXd& x) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd out(x.rows(), p + p * (p + 1) / 2);
  out.leftCols(p) = x;
  Eigen::Index col = p;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j; k < p; ++k) {
      out.col(col++) = x.col(j).cwiseProduct(x.col(k));
    }
  }
  return out;
}

FittedModel fit_lasso_learner(const LearnerSpec& spec, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y) {
  const bool expand = spec.param("second_order", 0.0) != 0.0;
  const Eigen::MatrixXd features = expand ? second_order_expansion(x) : x;
  const double c = spec.param("penalty_c", 1.1);
  const double gamma = spec.param("penalty_gamma", 0.1);
  const std::size_t n = static_cast<std::size_t>(features.rows());
  const std::size_t p = static_cast<std::size_t>(features.cols());
  const bool post = spec.param("post", 1.0) != 0.0;

  TrainingDiagnostics diag;
  std::shared_ptr<const Model> model;
  if (spec.task == Task::Regression) {
    LassoOptions options;
    options.max_sweeps = static_cast<std::size_t>(spec.param("max_sweeps", 10000));
    LassoFit fit = spec.has("lambda") ? fit_lasso_path(features, y, spec.param("lambda", 0.0), options)
                                      : fit_lasso_plugin(features, y, c, gamma, options);
    diag.tuning["lambda"] = fit.lambda;
    diag.tuning["nonzero"] = static_cast<double>((fit.coef_standardized.array() != 0.0).count());
    if (post) model = refit_on_support(features, y, fit.coef_standardized, false, expand);
    if (!model) model = std::make_shared<LassoModel>(std::move(fit), expand);
  } else {
    const double lambda =
        spec.has("lambda") ? spec.param("lambda", 0.0) : logistic_plugin_penalty(n, p, c, gamma);
    LogisticLassoFit fit = fit_logistic_lasso(features, y, lambda);
    diag.tuning["lambda"] = fit.lambda;
    diag.tuning["nonzero"] = static_cast<double>((fit.coef_standardized.array() != 0.0).count());
    if (post) model = refit_on_support(features, y, fit.coef_standardized, true, expand);
    if (!model) model = std::make_shared<LogisticLassoModel>(std::move(fit), expand);
  }
  diag.tuning["post"] = post ? 1.0 : 0.0;
  diag.in_sample_mse = mean_squared_error(y, model->predict(x));
  return FittedModel(std::move(model), spec.task, static_cast<std::size_t>(x.cols()), std::move(diag));
}

}  // namespace dml
