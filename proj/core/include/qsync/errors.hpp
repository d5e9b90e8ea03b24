#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsync {

enum class ErrorCode {
  InvalidDimension,
  InvalidArgument,
  UnsupportedTopology,
  InvalidRate,
  TruncationInsufficient,
  DimensionMismatch,
  InvalidCoupling,
  PositivityLoss,
  UndefinedMeasure,
  InvalidState,
  NoSolution,
  UnphysicalState,
  DegenerateDistribution,
  BlowUp,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// An integration failure that remembers the simulated time at which it happened.
class IntegrationError : public Error {
 public:
  IntegrationError(ErrorCode code, const std::string& message, double time)
      : Error(code, message + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// A non-finite ensemble member.
class BlowUpError : public IntegrationError {
 public:
  BlowUpError(const std::string& message, double time, std::size_t member)
      : IntegrationError(ErrorCode::BlowUp, message + " (member " + std::to_string(member) + ")", time),
        member_(member) {}

  std::size_t member() const noexcept { return member_; }

 private:
  std::size_t member_;
};

}  // namespace qsync
