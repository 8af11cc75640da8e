#pragma once

#include <stdexcept>
#include <string>

namespace upen {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo = 2,
  kGenerationFailed = 3,
  kNoEpisode = 4,
  kTrainingDiverged = 5,
  kPlanning = 6,
  kRuntime = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace upen
