#include "ntrack/error.hpp"

namespace ntrack {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidFilterSpec: return "InvalidFilterSpec";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::UpsamplingUnsupported: return "UpsamplingUnsupported";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::ConstantChannel: return "ConstantChannel";
    case ErrorCode::InvalidSeries: return "InvalidSeries";
    case ErrorCode::MonoRequired: return "MonoRequired";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::InsufficientChannels: return "InsufficientChannels";
    case ErrorCode::UnknownChannel: return "UnknownChannel";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::MissingValidation: return "MissingValidation";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::UndefinedCorrelation: return "UndefinedCorrelation";
    case ErrorCode::InsufficientTrials: return "InsufficientTrials";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::InsufficientPermutations: return "InsufficientPermutations";
    case ErrorCode::DegenerateTest: return "DegenerateTest";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NoInputs: return "NoInputs";
    case ErrorCode::MissingInputs: return "MissingInputs";
    }
    return "UnknownError";
}

}  // namespace ntrack
