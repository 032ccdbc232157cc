#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmq {

enum class ErrorCode {
    InvalidArgument,
    RowSumNonzero,
    NegativeOffDiagonal,
    Reducible,
    SingularSolve,
    TimeOutOfRange,
    TooFewQueues,
    NegativeRate,
    NonzeroSelfService,
    DimensionMismatch,
    ProbabilityOutOfRange,
    NonpositiveAlpha,
    NegativeEffectiveRate,
    ExplodedPopulation,
    GridMismatch,
    NonPSDDiffusion,
    ParseError,
    UnknownField,
    MissingRequired,
    IoError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above; the
/// message names the offending row, entry, field or epoch.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mmq
