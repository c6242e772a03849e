#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace luckskill {

enum class ErrorCode {
  // Input validation.
  kIo,
  kMissingColumn,
  kNonIntegerScore,
  kSelfMatch,
  kIrregularSchedule,
  kTooFewTeams,
  kInvalidArgument,
  kUnclassifiableScore,
  // Baseline / skill coefficient.
  kEmptySeason,
  kNotSkillSeason,
  kExhaustedTeams,
  // Features.
  kEmptyWindow,
  kMissingPriorYear,
  // Bradley-Terry-Poisson model.
  kNonPositiveSkill,
  kNonFiniteLogPost,
  kChainDiverged,
  kInsufficientIterations,
  kEmptyCondition,
};

std::string_view error_code_name(ErrorCode code);

// True for errors caused by bad input rather than by a failed computation.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace luckskill
