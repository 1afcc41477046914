#pragma once

#include <stdexcept>
#include <string>

namespace atmpc {

enum class ErrorCode {
  kDimMismatch,
  kUnboundedSet,
  kEmptySet,
  kNotSchurStable,
  kIterationCap,
  kEmptyTerminalSet,
  kBadStructure,
  kNoConvergence,
  kIdentificationInconsistency,
  kEmptyTightenedSet,
  kNumericalFailure,
  kPointOutsideTube,
  kInitiallyInfeasible,
  kNoValidGain,
  kInvalidScenario,
  kBackupInfeasible,
};

const char* to_string(ErrorCode code);

// Single exception type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace atmpc
