#include "dml/error.hpp"

namespace dml {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::DegenerateArm: return "DegenerateArm";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::KTooSmall: return "KTooSmall";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::PropensityOutOfRange: return "PropensityOutOfRange";
    case ErrorCode::NoTreatedInFold: return "NoTreatedInFold";
    case ErrorCode::DegenerateResidualVariance: return "DegenerateResidualVariance";
    case ErrorCode::PerturbationEscapesRange: return "PerturbationEscapesRange";
    case ErrorCode::InvalidCutoffs: return "InvalidCutoffs";
    case ErrorCode::ArmMissingInTrainingFold: return "ArmMissingInTrainingFold";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch:
    case ErrorCode::NonBinaryTreatment:
    case ErrorCode::DegenerateArm:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::MissingColumn:
      return true;
    default:
      return false;
  }
}

}  // namespace dml
