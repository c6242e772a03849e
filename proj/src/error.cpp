#include "luckskill/error.hpp"

namespace luckskill {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonIntegerScore: return "NonIntegerScore";
    case ErrorCode::kSelfMatch: return "SelfMatch";
    case ErrorCode::kIrregularSchedule: return "IrregularSchedule";
    case ErrorCode::kTooFewTeams: return "TooFewTeams";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnclassifiableScore: return "UnclassifiableScore";
    case ErrorCode::kEmptySeason: return "EmptySeason";
    case ErrorCode::kNotSkillSeason: return "NotSkillSeason";
    case ErrorCode::kExhaustedTeams: return "ExhaustedTeams";
    case ErrorCode::kEmptyWindow: return "EmptyWindow";
    case ErrorCode::kMissingPriorYear: return "MissingPriorYear";
    case ErrorCode::kNonPositiveSkill: return "NonPositiveSkill";
    case ErrorCode::kNonFiniteLogPost: return "NonFiniteLogPost";
    case ErrorCode::kChainDiverged: return "ChainDiverged";
    case ErrorCode::kInsufficientIterations: return "InsufficientIterations";
    case ErrorCode::kEmptyCondition: return "EmptyCondition";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kNonIntegerScore:
    case ErrorCode::kSelfMatch:
    case ErrorCode::kIrregularSchedule:
    case ErrorCode::kTooFewTeams:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kUnclassifiableScore:
    case ErrorCode::kEmptySeason:
    case ErrorCode::kEmptyWindow:
    case ErrorCode::kMissingPriorYear:
    case ErrorCode::kNotSkillSeason:
    case ErrorCode::kInsufficientIterations:
      return true;
    default:
      return false;
  }
}

}  // namespace luckskill
