#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pars {

enum class ErrorCode {
  EmptyInput,
  MalformedStructure,
  InvalidPlqy,
  NonFiniteInput,
  EmptyBatch,
  EmptyRecipe,
  TeacherUnavailable,
  AuthFailure,
  ResponseMalformed,
  EmptyPool,
  NoNumericAnswers,
  JudgeUnavailable,
  UnparseableVerdict,
  NoScoredCandidates,
  ZeroAcceptance,
  InputSchemaError,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::MalformedStructure: return "malformed_structure";
    case ErrorCode::InvalidPlqy: return "invalid_plqy";
    case ErrorCode::NonFiniteInput: return "non_finite_input";
    case ErrorCode::EmptyBatch: return "empty_batch";
    case ErrorCode::EmptyRecipe: return "empty_recipe";
    case ErrorCode::TeacherUnavailable: return "teacher_unavailable";
    case ErrorCode::AuthFailure: return "auth_failure";
    case ErrorCode::ResponseMalformed: return "response_malformed";
    case ErrorCode::EmptyPool: return "empty_pool";
    case ErrorCode::NoNumericAnswers: return "no_numeric_answers";
    case ErrorCode::JudgeUnavailable: return "judge_unavailable";
    case ErrorCode::UnparseableVerdict: return "unparseable_verdict";
    case ErrorCode::NoScoredCandidates: return "no_scored_candidates";
    case ErrorCode::ZeroAcceptance: return "zero_acceptance";
    case ErrorCode::InputSchemaError: return "input_schema_error";
    case ErrorCode::ConfigError: return "config_error";
    case ErrorCode::IoError: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pars
