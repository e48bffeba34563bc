#include "lcmodel/error.hpp"

namespace lcmodel {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositiveError: return "NonPositiveError";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::UnsortedTimes: return "UnsortedTimes";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoNonTransients: return "NoNonTransients";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::NonFiniteMeasure: return "NonFiniteMeasure";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::TooFewTimes: return "TooFewTimes";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace lcmodel
