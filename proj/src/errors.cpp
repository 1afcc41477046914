#include "atmpc/errors.hpp"

namespace atmpc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kUnboundedSet: return "UnboundedSet";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kNotSchurStable: return "NotSchurStable";
    case ErrorCode::kIterationCap: return "IterationCap";
    case ErrorCode::kEmptyTerminalSet: return "EmptyTerminalSet";
    case ErrorCode::kBadStructure: return "BadStructure";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kIdentificationInconsistency: return "IdentificationInconsistency";
    case ErrorCode::kEmptyTightenedSet: return "EmptyTightenedSet";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kPointOutsideTube: return "PointOutsideTube";
    case ErrorCode::kInitiallyInfeasible: return "InitiallyInfeasible";
    case ErrorCode::kNoValidGain: return "NoValidGain";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
    case ErrorCode::kBackupInfeasible: return "BackupInfeasible";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace atmpc
