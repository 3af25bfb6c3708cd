#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xme {

// Failure categories surfaced by the library. Each maps to one documented
// error condition of an operation; the CLI prints the code name alongside
// the message.
enum class ErrorCode {
    EmptyArm,
    MissingTruth,
    DegenerateWeights,
    DimensionMismatch,
    SeparationDetected,
    RankDeficient,
    NotConverged,
    ProbabilityOutOfRange,
    ZeroSpread,
    InsufficientStratum,
    MissingColumn,
    BadLabel,
    NonNumeric,
    ValidationRowTreated,
    InvalidConfig,
    IoFailure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace xme
