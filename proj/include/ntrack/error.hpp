#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ntrack {

enum class ErrorCode {
    InvalidFilterSpec,
    NonFiniteInput,
    UpsamplingUnsupported,
    InvalidRate,
    ConstantChannel,
    InvalidSeries,
    MonoRequired,
    InvalidBand,
    InvalidWindow,
    InsufficientChannels,
    UnknownChannel,
    DegenerateBasis,
    DimensionMismatch,
    RateMismatch,
    MissingValidation,
    DegenerateInput,
    UndefinedCorrelation,
    InsufficientTrials,
    WindowTooLong,
    InsufficientPermutations,
    DegenerateTest,
    InvalidSpec,
    IoError,
    FormatError,
    ConfigError,
    NoInputs,
    MissingInputs,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace ntrack
