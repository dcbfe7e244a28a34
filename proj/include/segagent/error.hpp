#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace segagent {

enum class ErrorCode {
  DegenerateBox,
  EmptyCandidates,
  InvalidArgument,
  ScaleTooSmall,
  BadMaskFormat,
  BadImage,
  Transport,
  ParseFailure,
  ChoiceOutOfRange,
  DimsMismatch,
  AllCandidatesFailed,
  ManifestParse,
  MissingFile,
  EmptyInput,
  Config,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace segagent
