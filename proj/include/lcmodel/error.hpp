/**
 * @file error.hpp
 * @brief Error codes and the exception type shared by every lcmodel module.
 */
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lcmodel {

enum class ErrorCode {
  // core
  EmptyInput,
  MalformedRow,
  NonPositiveError,
  TooFewObservations,
  UnsortedTimes,
  NonFiniteValue,
  InvalidConfig,
  // gp
  NoNonTransients,
  FactorizationFailure,
  DegenerateSpan,
  // features
  NonFiniteMeasure,
  // classify
  DatasetTooSmall,
  SingularCovariance,
  SingleClass,
  DimensionMismatch,
  MissingClass,
  MalformedModel,
  // synth
  InfeasibleSpec,
  TooFewTimes,
  // io
  FileNotFound,
  IoFailure,
};

/// Stable machine-readable name, e.g. "TooFewObservations".
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lcmodel
