#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dml {

using Index = std::size_t;
using IndexList = std::vector<Index>;

/// Observations (Y_i, D_i, Z_i). Immutable once validated.
class Dataset {
 public:
  std::size_t size() const { return static_cast<std::size_t>(outcomes_.size()); }
  std::size_t num_covariates() const { return static_cast<std::size_t>(covariates_.cols()); }

  const Eigen::VectorXd& outcomes() const { return outcomes_; }
  const Eigen::VectorXd& treatments() const { return treatments_; }
  const Eigen::MatrixXd& covariates() const { return covariates_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::size_t num_treated() const;

 private:
  friend Dataset validate_dataset(Eigen::VectorXd, Eigen::VectorXd, Eigen::MatrixXd,
                                  std::vector<std::string>);
  Dataset() = default;

  Eigen::VectorXd outcomes_;
  Eigen::VectorXd treatments_;
  Eigen::MatrixXd covariates_;
  std::vector<std::string> feature_names_;
};

/// Checks equal lengths (N >= 2), binary treatment with both arms present, and
/// finite outcomes/covariates. Throws dml::Error with LengthMismatch,
/// NonBinaryTreatment, DegenerateArm or NonFiniteValue.
Dataset validate_dataset(Eigen::VectorXd outcomes, Eigen::VectorXd treatments,
                         Eigen::MatrixXd covariates, std::vector<std::string> feature_names = {});

/// K-way partition of {0..N-1}. Fold ids are 0-based.
class FoldPartition {
 public:
  /// Adopts an explicit assignment vector. Every fold in [0, folds) must be non-empty.
  static FoldPartition from_assignments(std::vector<Index> assignments, std::size_t folds,
                                        std::uint64_t seed);

  const std::vector<Index>& assignments() const { return assignments_; }
  std::size_t folds() const { return folds_; }
  std::size_t size() const { return assignments_.size(); }
  std::uint64_t seed() const { return seed_; }

  /// Indices in fold k (I_k), ascending.
  IndexList fold(std::size_t k) const;
  /// Indices outside fold k (I_k^c), ascending.
  IndexList complement(std::size_t k) const;
  std::size_t fold_size(std::size_t k) const;

 private:
  FoldPartition() = default;

  std::vector<Index> assignments_;
  std::size_t folds_ = 0;
  std::uint64_t seed_ = 0;
};

/// Seeded balanced partition: Fisher-Yates shuffle of the indices with
/// dml::Rng(seed), then contiguous slicing. The first N mod K folds receive one
/// extra element. Throws KTooSmall (K < 2) or KTooLarge (K > N).
FoldPartition make_partition(std::size_t n, std::size_t folds, std::uint64_t seed);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const Index> rows);
Eigen::VectorXd select_rows(const Eigen::VectorXd& v, std::span<const Index> rows);

}  // namespace dml
