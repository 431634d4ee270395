#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdmd {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFiniteData,
  MalformedFile,
  IoError,
  NonConvergence,
  SingularSystem,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `stage()` names the pipeline stage that raised it
/// (empty when the error comes from a direct library call).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, what(), std::move(stage)); }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace pdmd
