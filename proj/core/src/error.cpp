#include "horizon/error.hpp"

namespace horizon {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateProjection: return "DegenerateProjection";
    case ErrorCode::kVerticalHorizon: return "VerticalHorizon";
    case ErrorCode::kDegenerateModel: return "DegenerateModel";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kDegenerateBins: return "DegenerateBins";
    case ErrorCode::kMissingExternalGrid: return "MissingExternalGrid";
    case ErrorCode::kDegenerateDistribution: return "DegenerateDistribution";
    case ErrorCode::kMissingPrediction: return "MissingPrediction";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace horizon
