#include "dml/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dml/error.hpp"
#include "dml/rng.hpp"

namespace dml {

std::size_t Dataset::num_treated() const {
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < treatments_.size(); ++i) count += treatments_[i] == 1.0;
  return count;
}

Dataset validate_dataset(Eigen::VectorXd outcomes, Eigen::VectorXd treatments,
                         Eigen::MatrixXd covariates, std::vector<std::string> feature_names) {
  const auto n = outcomes.size();
  if (treatments.size() != n || covariates.rows() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "outcomes=" + std::to_string(n) + " treatments=" + std::to_string(treatments.size()) +
                    " covariate rows=" + std::to_string(covariates.rows()));
  }
  if (n < 2) throw Error(ErrorCode::LengthMismatch, "need at least 2 observations");
  if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(covariates.cols())) {
    throw Error(ErrorCode::LengthMismatch, "feature_names does not match covariate count");
  }

  std::size_t treated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = treatments[i];
    if (d != 0.0 && d != 1.0) {
      throw Error(ErrorCode::NonBinaryTreatment,
                  "row " + std::to_string(i) + " has treatment " + std::to_string(d));
    }
    treated += d == 1.0;
    if (!std::isfinite(outcomes[i])) {
      throw Error(ErrorCode::NonFiniteValue, "outcome at row " + std::to_string(i));
    }
  }
  if (treated == 0 || treated == static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::DegenerateArm, treated == 0 ? "no treated observations"
                                                       : "no untreated observations");
  }
  for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(covariates(i, j))) {
        throw Error(ErrorCode::NonFiniteValue,
                    "covariate " + std::to_string(j) + " at row " + std::to_string(i));
      }
    }
  }

  Dataset data;
  data.outcomes_ = std::move(outcomes);
  data.treatments_ = std::move(treatments);
  data.covariates_ = std::move(covariates);
  data.feature_names_ = std::move(feature_names);
  return data;
}

FoldPartition FoldPartition::from_assignments(std::vector<Index> assignments, std::size_t folds,
                                              std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::KTooSmall, "K=" + std::to_string(folds));
  if (folds > assignments.size()) throw Error(ErrorCode::KTooLarge, "K exceeds N");
  std::vector<std::size_t> counts(folds, 0);
  for (Index a : assignments) {
    if (a >= folds) throw Error(ErrorCode::InvalidArgument, "fold id out of range");
    ++counts[a];
  }
  for (std::size_t k = 0; k < folds; ++k) {
    if (counts[k] == 0) throw Error(ErrorCode::InvalidArgument, "empty fold " + std::to_string(k));
  }
  FoldPartition p;
  p.assignments_ = std::move(assignments);
  p.folds_ = folds;
  p.seed_ = seed;
  return p;
}

IndexList FoldPartition::fold(std::size_t k) const {
  IndexList out;
  for (Index i = 0; i < assignments_.size(); ++i) {
    if (assignments_[i] == k) out.push_back(i);
  }
  return out;
}

IndexList FoldPartition::complement(std::size_t k) const {
  IndexList out;
  for (Index i = 0; i < assignments_.size(); ++i) {
    if (assignments_[i] != k) out.push_back(i);
  }
  return out;
}

std::size_t FoldPartition::fold_size(std::size_t k) const {
  return static_cast<std::size_t>(std::count(assignments_.begin(), assignments_.end(), k));
}

FoldPartition make_partition(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::KTooSmall, "K=" + std::to_string(folds));
  if (folds > n) {
    throw Error(ErrorCode::KTooLarge, "K=" + std::to_string(folds) + " > N=" + std::to_string(n));
  }
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }

  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::vector<Index> assignments(n);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    for (std::size_t j = 0; j < len; ++j) assignments[order[pos++]] = k;
  }
  return FoldPartition::from_assignments(std::move(assignments), folds, seed);
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const Index> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out(static_cast<Eigen::Index>(i), j) = x(static_cast<Eigen::Index>(rows[i]), j);
    }
  }
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, std::span<const Index> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(rows[i])];
  }
  return out;
}

}  // namespace dml
