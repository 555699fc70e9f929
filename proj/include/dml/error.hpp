#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dml {

enum class ErrorCode {
  // data
  LengthMismatch,
  NonBinaryTreatment,
  DegenerateArm,
  NonFiniteValue,
  MissingColumn,
  // partitioning
  KTooSmall,
  KTooLarge,
  // learners
  InvalidHyperparameter,
  SingularDesign,
  InsufficientData,
  DimensionMismatch,
  NoConvergence,
  EmptyCandidates,
  // scores
  PropensityOutOfRange,
  NoTreatedInFold,
  DegenerateResidualVariance,
  PerturbationEscapesRange,
  InvalidCutoffs,
  // cross-fitting
  ArmMissingInTrainingFold,
  // numerics / generic
  OutOfDomain,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

/// True for codes that describe a problem with the input data rather than the pipeline.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Fold in which the error was raised, when it came out of a cross-fitting pass.
  const std::optional<std::size_t>& fold() const noexcept { return fold_; }

  Error with_fold(std::size_t fold) const {
    Error copy(code_, std::string(what()) + " (fold " + std::to_string(fold) + ")", 0);
    copy.fold_ = fold;
    return copy;
  }

 private:
  Error(ErrorCode code, const std::string& full, int)
      : std::runtime_error(full), code_(code) {}

  ErrorCode code_;
  std::optional<std::size_t> fold_;
};

}  // namespace dml
