#pragma once

#include <stdexcept>
#include <string>

namespace scenesim {

enum class ErrorCode {
  kParse,
  kValidation,
  kNoLaneFound,
  kUnreachableGoal,
  kInsufficientData,
  kNoGroundFound,
  kEmptyInput,
  kOffRoute,
  kPlannerDisconnect,
  kProtocol,
  kConfig,
  kIo,
};

const char* to_string(ErrorCode code);

// Every failure surfaced by the library carries a category so the CLI can
// map it onto an exit code and callers can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scenesim
