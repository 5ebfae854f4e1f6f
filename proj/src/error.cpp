#include "koopgait/error.hpp"

namespace koopgait {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingDirectory: return "MissingDirectory";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::UnreadableImage: return "UnreadableImage";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonBinaryInput: return "NonBinaryInput";
    case ErrorCode::SequenceTooShort: return "SequenceTooShort";
    case ErrorCode::NoPeriodicity: return "NoPeriodicity";
    case ErrorCode::OddResolution: return "OddResolution";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::DegenerateCycle: return "DegenerateCycle";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::BranchCut: return "BranchCut";
    case ErrorCode::NotDiagonalizable: return "NotDiagonalizable";
    case ErrorCode::InconsistentShapes: return "InconsistentShapes";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnfittedModel: return "UnfittedModel";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace koopgait
