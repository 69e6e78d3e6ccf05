#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bisac {

enum class ErrorCode {
    InvalidConfig,
    InvalidInput,
    InvalidCovariance,
    GeometrySingular,
    NumericalBreakdown,
    DegenerateLinearization,
    SnrInfeasible,
    SubproblemInfeasible,
    CalibrationDegenerate,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::InvalidCovariance: return "InvalidCovariance";
        case ErrorCode::GeometrySingular: return "GeometrySingular";
        case ErrorCode::NumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::DegenerateLinearization: return "DegenerateLinearization";
        case ErrorCode::SnrInfeasible: return "SnrInfeasible";
        case ErrorCode::SubproblemInfeasible: return "SubproblemInfeasible";
        case ErrorCode::CalibrationDegenerate: return "CalibrationDegenerate";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace bisac
