#include "xme/errors.hpp"

namespace xme {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::MissingTruth: return "MissingTruth";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::ZeroSpread: return "ZeroSpread";
    case ErrorCode::InsufficientStratum: return "InsufficientStratum";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::NonNumeric: return "NonNumeric";
    case ErrorCode::ValidationRowTreated: return "ValidationRowTreated";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

} // namespace xme
