#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace koopgait {

enum class ErrorCode {
  // dataio
  MissingDirectory,
  TooFewFrames,
  UnreadableImage,
  IoError,
  BadMagic,
  DimMismatch,
  BadSpec,
  // ovs
  ShapeMismatch,
  NonBinaryInput,
  SequenceTooShort,
  NoPeriodicity,
  // coder / koopman / training
  OddResolution,
  NonFiniteLoss,
  DegenerateCycle,
  NumericalFailure,
  BranchCut,
  NotDiagonalizable,
  InconsistentShapes,
  // classify
  SingleClass,
  EmptyInput,
  UnfittedModel,
  // cli
  BadConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace koopgait
