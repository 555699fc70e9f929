#include "dml/learners/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dml/error.hpp"
#include "dml/learners/boosting.hpp"
#include "dml/learners/ensemble.hpp"
#include "dml/learners/forest.hpp"
#include "dml/learners/lasso.hpp"
#include "dml/learners/linear.hpp"
#include "dml/learners/tree.hpp"

namespace dml {
namespace {

struct KindInfo {
  LearnerKind kind;
  const char* name;
  const char* display;
};

constexpr KindInfo kKinds[] = {
    {LearnerKind::Lasso, "lasso", "Lasso"},
    {LearnerKind::RegTree, "reg_tree", "Reg. Tree"},
    {LearnerKind::RandomForest, "random_forest", "Random Forest"},
    {LearnerKind::Boosting, "boosting", "Boosting"},
    {LearnerKind::Ensemble, "ensemble", "Ensemble"},
    {LearnerKind::Best, "best", "Best"},
    {LearnerKind::OracleLinear, "oracle_linear", "Oracle Linear"},
};

const KindInfo& info(LearnerKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown learner kind");
}

[[noreturn]] void bad(const LearnerSpec& spec, const std::string& key, const std::string& why) {
  throw Error(ErrorCode::InvalidHyperparameter,
              std::string(to_string(spec.kind)) + "." + key + " " + why);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

void require_int(const LearnerSpec& spec, const std::string& key, double lo) {
  if (!spec.has(key)) return;
  const double v = spec.param(key, 0.0);
  if (!is_integer(v) || v < lo) bad(spec, key, "must be an integer >= " + std::to_string(static_cast<long>(lo)));
}

void require_flag(const LearnerSpec& spec, const std::string& key) {
  if (!spec.has(key)) return;
  const double v = spec.param(key, 0.0);
  if (v != 0.0 && v != 1.0) bad(spec, key, "must be 0 or 1");
}

void require_range(const LearnerSpec& spec, const std::string& key, double lo, double hi, bool lo_open,
                   bool hi_open) {
  if (!spec.has(key)) return;
  const double v = spec.param(key, 0.0);
  const bool ok = std::isfinite(v) && (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
  if (!ok) bad(spec, key, "out of range");
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const char* to_string(LearnerKind kind) { return info(kind).name; }

const char* display_name(LearnerKind kind) { return info(kind).display; }

LearnerKind learner_kind_from_string(const std::string& name) {
  for (const auto& k : kKinds) {
    if (name == k.name) return k.kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

const std::vector<std::string>& known_hyperparameters(LearnerKind kind) {
  static const std::map<LearnerKind, std::vector<std::string>> keys = {
      {LearnerKind::Lasso, {"lambda", "penalty_c", "penalty_gamma", "second_order", "post", "max_sweeps"}},
      {LearnerKind::RegTree, {"min_leaf", "max_depth", "cv_folds", "ccp_alpha"}},
      {LearnerKind::RandomForest, {"trees", "bootstrap", "min_leaf", "max_depth", "mtry"}},
      {LearnerKind::Boosting, {"depth", "min_leaf", "learning_rate", "rounds", "max_rounds", "cv_folds"}},
      {LearnerKind::Ensemble, {"cv_folds"}},
      {LearnerKind::Best, {"cv_folds"}},
      {LearnerKind::OracleLinear, {}},
  };
  return keys.at(kind);
}

void validate(const LearnerSpec& spec) {
  const auto& known = known_hyperparameters(spec.kind);
  for (const auto& [key, value] : spec.params) {
    if (std::find(known.begin(), known.end(), key) == known.end()) bad(spec, key, "is not a known hyperparameter");
    if (!std::isfinite(value)) bad(spec, key, "must be finite");
  }
  switch (spec.kind) {
    case LearnerKind::Lasso:
      require_range(spec, "lambda", 0.0, kInf, false, true);
      require_range(spec, "penalty_c", 0.0, kInf, true, true);
      require_range(spec, "penalty_gamma", 0.0, 1.0, true, true);
      require_flag(spec, "second_order");
      require_flag(spec, "post");
      require_int(spec, "max_sweeps", 1);
      break;
    case LearnerKind::RegTree:
      require_int(spec, "min_leaf", 1);
      require_int(spec, "max_depth", 1);
      require_int(spec, "cv_folds", 0);
      if (spec.has("cv_folds") && spec.param("cv_folds", 0) == 1) bad(spec, "cv_folds", "must be 0 or >= 2");
      require_range(spec, "ccp_alpha", 0.0, kInf, false, true);
      break;
    case LearnerKind::RandomForest:
      require_int(spec, "trees", 1);
      require_flag(spec, "bootstrap");
      require_int(spec, "min_leaf", 1);
      require_int(spec, "max_depth", 1);
      require_int(spec, "mtry", 1);
      break;
    case LearnerKind::Boosting:
      require_int(spec, "depth", 1);
      require_int(spec, "min_leaf", 1);
      require_range(spec, "learning_rate", 0.0, 1.0, true, false);
      require_int(spec, "rounds", 1);
      require_int(spec, "max_rounds", 1);
      require_int(spec, "cv_folds", 2);
      break;
    case LearnerKind::Ensemble:
    case LearnerKind::Best:
      require_int(spec, "cv_folds", 2);
      if (spec.kind == LearnerKind::Ensemble && !spec.components.empty() && spec.components.size() < 2) {
        bad(spec, "components", "needs at least 2 learners");
      }
      for (const auto& c : spec.components) validate(c);
      break;
    case LearnerKind::OracleLinear:
      break;
  }
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != num_features_) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(num_features_) + " features, got " +
                                                  std::to_string(x.cols()));
  }
  Eigen::VectorXd out = model_->predict(x);
  if (!out.allFinite()) throw Error(ErrorCode::NonFiniteValue, "model produced a non-finite prediction");
  if (task_ == Task::Probability) out = out.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                std::uint64_t seed) {
  validate(spec);
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, "x rows != y length");
  if (y.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 training rows");
  if (!y.allFinite() || !x.allFinite()) throw Error(ErrorCode::NonFiniteValue, "training data must be finite");
  if (spec.task == Task::Probability) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::InvalidArgument, "probability target must be 0/1");
    }
  }
  switch (spec.kind) {
    case LearnerKind::Lasso: return fit_lasso_learner(spec, x, y);
    case LearnerKind::RegTree: return fit_tree_learner(spec, x, y, seed);
    case LearnerKind::RandomForest: return fit_forest_learner(spec, x, y, seed);
    case LearnerKind::Boosting: return fit_boosting_learner(spec, x, y, seed);
    case LearnerKind::Ensemble: {
      const auto folds = static_cast<std::size_t>(spec.param("cv_folds", 5));
      return fit_ensemble(spec.components.empty() ? default_ensemble_components(spec.task) : spec.components, x, y,
                          folds, seed, spec.task);
    }
    case LearnerKind::Best: return fit_best(spec, x, y, seed);
    case LearnerKind::OracleLinear: return fit_linear_learner(spec, x, y);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown learner kind");
}

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction) {
  if (y.size() != prediction.size()) throw Error(ErrorCode::DimensionMismatch, "length mismatch");
  if (y.size() == 0) return 0.0;
  return (y - prediction).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace dml
