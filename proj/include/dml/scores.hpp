#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace dml {

enum class ScoreKind { ATE, ATTE, PLM };

const char* to_string(ScoreKind kind);
/// Accepts "ate", "atte", "plm" (any case).
ScoreKind score_kind_from_string(const std::string& name);

/// Doubly robust ATE score. Throws PropensityOutOfRange unless 0 < m < 1.
double ate_score(double y, double d, double g0, double g1, double m, double theta);

/// ATTE score with m_bar = E[D]. Throws PropensityOutOfRange unless m_z and m_bar lie in (0, 1).
double atte_score(double y, double d, double g0, double m_z, double m_bar, double theta);

/// Partially linear score (Y - l - theta (D - m)) (D - m) with l = E[Y|Z].
double plm_score(double y, double d, double l, double m, double theta);

/// Nuisance values evaluated on a set of rows. PLM uses l_hat and m_hat and
/// leaves g0_hat, g1_hat empty; ATE and ATTE leave l_hat empty.
struct NuisanceEstimates {
  Eigen::VectorXd g0_hat;
  Eigen::VectorXd g1_hat;
  Eigen::VectorXd m_hat;
  Eigen::VectorXd l_hat;
  double m_bar = 0.0;
  std::size_t n_trimmed = 0;
  /// Learner chosen per nuisance ("g0", "g1", "m", "l") when selection ran.
  std::map<std::string, std::string> selected;
};

/// Elementwise score values at theta.
Eigen::VectorXd score_values(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                             const NuisanceEstimates& nuisance, double theta);

/// Exact root of the mean score over the given rows. Throws InsufficientData
/// for empty input, NoTreatedInFold (ATTE, no treated rows) and
/// DegenerateResidualVariance (PLM, sum (D - m)^2 == 0).
double solve_theta(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                   const NuisanceEstimates& nuisance);

struct TrimResult {
  Eigen::VectorXd values;
  std::size_t count = 0;
};

/// Clamps to [lo, hi]; throws InvalidCutoffs unless 0 < lo < hi < 1.
TrimResult trim_propensity(const Eigen::VectorXd& m_raw, double lo, double hi);

/// Direction h of a nuisance perturbation. Empty vectors mean zero.
struct Perturbation {
  Eigen::VectorXd dg0;
  Eigen::VectorXd dg1;
  Eigen::VectorXd dm;
  Eigen::VectorXd dl;
  double dm_bar = 0.0;
};

using ScoreFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                                    const NuisanceEstimates& nuisance, double theta)>;

ScoreFunction score_function(ScoreKind kind);
/// Plug-in regression score g1 - g0 - theta, which is not orthogonal.
ScoreFunction naive_ate_score_function();

struct GateauxResult {
  double derivative = 0.0;  // central difference at step t
  double half_step = 0.0;   // central difference at step t/2
  double richardson = 0.0;  // (4 half_step - derivative) / 3
};

/// Central finite difference of the sample-mean score along `direction`.
/// Throws InvalidArgument unless 0 < t <= 0.1 and PerturbationEscapesRange if
/// m or m_bar moved by +-t leaves (epsilon, 1 - epsilon).
GateauxResult gateaux_derivative(const ScoreFunction& score, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                 const NuisanceEstimates& truth, double theta0, const Perturbation& direction,
                                 double t = 1e-3, double epsilon = 1e-6);
GateauxResult gateaux_derivative(ScoreKind kind, const Eigen::VectorXd& y, const Eigen::VectorXd& d,
                                 const NuisanceEstimates& truth, double theta0, const Perturbation& direction,
                                 double t = 1e-3, double epsilon = 1e-6);

}  // namespace dml
