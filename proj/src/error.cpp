#include "segagent/error.hpp"

namespace segagent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ScaleTooSmall: return "ScaleTooSmall";
    case ErrorCode::BadMaskFormat: return "BadMaskFormat";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::ChoiceOutOfRange: return "ChoiceOutOfRange";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::ManifestParse: return "ManifestParse";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace segagent
