#include "dml/scores.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "dml/error.hpp"

namespace dml {
namespace {

void check_propensity(double m, const char* what) {
  if (!(m > 0.0 && m < 1.0)) {
    throw Error(ErrorCode::PropensityOutOfRange, std::string(what) + " = " + std::to_string(m) + " not in (0, 1)");
  }
}

void check_length(const Eigen::VectorXd& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " + std::to_string(v.size()) +
                                                  ", expected " + std::to_string(n));
  }
}

void check_inputs(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d, const NuisanceEstimates& nu) {
  const Eigen::Index n = y.size();
  check_length(d, n, "d");
  check_length(nu.m_hat, n, "m_hat");
  for (Eigen::Index i = 0; i < n; ++i) check_propensity(nu.m_hat[i], "m_hat");
  switch (kind) {
    case ScoreKind::ATE:
      check_length(nu.g0_hat, n, "g0_hat");
      check_length(nu.g1_hat, n, "g1_hat");
      break;
    case ScoreKind::ATTE:
      check_length(nu.g0_hat, n, "g0_hat");
      check_propensity(nu.m_bar, "m_bar");
      break;
    case ScoreKind::PLM:
      check_length(nu.l_hat, n, "l_hat");
      break;
  }
}

// Score is a + b * theta; returns the pair (a, b) per row.
struct AffineScore {
  Eigen::ArrayXd a;
  Eigen::ArrayXd b;
};

AffineScore affine_parts(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                         const NuisanceEstimates& nu) {
  check_inputs(kind, y, d, nu);
  const Eigen::ArrayXd ya = y.array(), da = d.array(), m = nu.m_hat.array();
  AffineScore s;
  switch (kind) {
    case ScoreKind::ATE: {
      const Eigen::ArrayXd g0 = nu.g0_hat.array(), g1 = nu.g1_hat.array();
      s.a = (g1 - g0) + da * (ya - g1) / m - (1.0 - da) * (ya - g0) / (1.0 - m);
      s.b = Eigen::ArrayXd::Constant(y.size(), -1.0);
      break;
    }
    case ScoreKind::ATTE: {
      const Eigen::ArrayXd r0 = ya - nu.g0_hat.array();
      s.a = da * r0 / nu.m_bar - m * (1.0 - da) * r0 / ((1.0 - m) * nu.m_bar);
      s.b = -da / nu.m_bar;
      break;
    }
    case ScoreKind::PLM: {
      const Eigen::ArrayXd v = da - m;
      s.a = (ya - nu.l_hat.array()) * v;
      s.b = -v * v;
      break;
    }
  }
  return s;
}

Eigen::VectorXd plus(const Eigen::VectorXd& base, const Eigen::VectorXd& h, double t) {
  if (h.size() == 0 || base.size() == 0) return base;
  check_length(h, base.size(), "perturbation");
  return base + t * h;
}

NuisanceEstimates shifted(const NuisanceEstimates& truth, const Perturbation& h, double t, double epsilon) {
  NuisanceEstimates out = truth;
  out.g0_hat = plus(truth.g0_hat, h.dg0, t);
  out.g1_hat = plus(truth.g1_hat, h.dg1, t);
  out.m_hat = plus(truth.m_hat, h.dm, t);
  out.l_hat = plus(truth.l_hat, h.dl, t);
  out.m_bar = truth.m_bar + t * h.dm_bar;
  const auto inside = [epsilon](double v) { return v > epsilon && v < 1.0 - epsilon; };
  for (Eigen::Index i = 0; i < out.m_hat.size(); ++i) {
    if (!inside(out.m_hat[i])) throw Error(ErrorCode::PerturbationEscapesRange, "perturbed m leaves (eps, 1-eps)");
  }
  if (h.dm_bar != 0.0 && !inside(out.m_bar)) {
    throw Error(ErrorCode::PerturbationEscapesRange, "perturbed m_bar leaves (eps, 1-eps)");
  }
  return out;
}

}  // namespace

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::ATE: return "ATE";
    case ScoreKind::ATTE: return "ATTE";
    case ScoreKind::PLM: return "PLM";
  }
  return "?";
}

ScoreKind score_kind_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ate") return ScoreKind::ATE;
  if (lower == "atte") return ScoreKind::ATTE;
  if (lower == "plm") return ScoreKind::PLM;
  throw Error(ErrorCode::InvalidArgument, "unknown score '" + name + "'");
}

double ate_score(double y, double d, double g0, double g1, double m, double theta) {
  check_propensity(m, "m");
  return (g1 - g0) + d * (y - g1) / m - (1.0 - d) * (y - g0) / (1.0 - m) - theta;
}

double atte_score(double y, double d, double g0, double m_z, double m_bar, double theta) {
  check_propensity(m_z, "m_z");
  check_propensity(m_bar, "m_bar");
  const double r0 = y - g0;
  return d * r0 / m_bar - m_z * (1.0 - d) * r0 / ((1.0 - m_z) * m_bar) - theta * d / m_bar;
}

double plm_score(double y, double d, double l, double m, double theta) {
  const double v = d - m;
  return (y - l - theta * v) * v;
}

Eigen::VectorXd score_values(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                             const NuisanceEstimates& nuisance, double theta) {
  const AffineScore s = affine_parts(kind, y, d, nuisance);
  return (s.a + s.b * theta).matrix();
}

double solve_theta(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                   const NuisanceEstimates& nuisance) {
  if (y.size() == 0) throw Error(ErrorCode::InsufficientData, "empty fold");
  const AffineScore s = affine_parts(kind, y, d, nuisance);
  switch (kind) {
    case ScoreKind::ATE:
      return s.a.mean();
    case ScoreKind::ATTE: {
      const double treated = d.sum();
      if (treated == 0.0) throw Error(ErrorCode::NoTreatedInFold, "no treated observations in fold");
      // Multiply through by m_bar so the root does not depend on it.
      return (s.a * nuisance.m_bar).sum() / treated;
    }
    case ScoreKind::PLM: {
      const double denom = -s.b.sum();
      if (denom == 0.0) throw Error(ErrorCode::DegenerateResidualVariance, "sum (D - m)^2 is zero");
      return s.a.sum() / denom;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown score kind");
}

TrimResult trim_propensity(const Eigen::VectorXd& m_raw, double lo, double hi) {
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
    throw Error(ErrorCode::InvalidCutoffs, "need 0 < lo < hi < 1, got lo=" + std::to_string(lo) +
                                               " hi=" + std::to_string(hi));
  }
  TrimResult out;
  out.values = m_raw;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    const double clamped = std::clamp(out.values[i], lo, hi);
    if (clamped != out.values[i]) {
      out.values[i] = clamped;
      ++out.count;
    }
  }
  return out;
}

ScoreFunction score_function(ScoreKind kind) {
  return [kind](const Eigen::VectorXd& y, const Eigen::VectorXd& d, const NuisanceEstimates& nu, double theta) {
    return score_values(kind, y, d, nu, theta);
  };
}

ScoreFunction naive_ate_score_function() {
  return [](const Eigen::VectorXd& y, const Eigen::VectorXd&, const NuisanceEstimates& nu, double theta) {
    check_length(nu.g0_hat, y.size(), "g0_hat");
    check_length(nu.g1_hat, y.size(), "g1_hat");
    return Eigen::VectorXd((nu.g1_hat - nu.g0_hat).array() - theta);
  };
}

GateauxResult gateaux_derivative(const ScoreFunction& score, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                 const NuisanceEstimates& truth, double theta0, const Perturbation& direction,
                                 double t, double epsilon) {
  if (!(t > 0.0 && t <= 0.1)) throw Error(ErrorCode::InvalidArgument, "step t must lie in (0, 0.1]");
  if (y.size() == 0) throw Error(ErrorCode::InsufficientData, "empty sample");
  const auto central = [&](double step) {
    const double up = score(y, d, shifted(truth, direction, step, epsilon), theta0).mean();
    const double down = score(y, d, shifted(truth, direction, -step, epsilon), theta0).mean();
    return (up - down) / (2.0 * step);
  };
  GateauxResult r;
  r.derivative = central(t);
  r.half_step = central(0.5 * t);
  r.richardson = (4.0 * r.half_step - r.derivative) / 3.0;
  return r;
}

GateauxResult gateaux_derivative(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                 const NuisanceEstimates& truth, double theta0, const Perturbation& direction,
                                 double t, double epsilon) {
  return gateaux_derivative(score_function(kind), y, d, truth, theta0, direction, t, epsilon);
}

}  // namespace dml
