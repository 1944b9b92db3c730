#pragma once

#include <stdexcept>
#include <string>

namespace adamec {

enum class ErrorCode {
    InvalidArgument,
    NotFound,
    InsufficientData,
    TraceExhausted,
    UnsupportedOperator,
    DeviceUnavailable,
    DegenerateTarget,
    CannotFit,
    IoError,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:     return "InvalidArgument";
        case ErrorCode::NotFound:            return "NotFound";
        case ErrorCode::InsufficientData:    return "InsufficientData";
        case ErrorCode::TraceExhausted:      return "TraceExhausted";
        case ErrorCode::UnsupportedOperator: return "UnsupportedOperator";
        case ErrorCode::DeviceUnavailable:   return "DeviceUnavailable";
        case ErrorCode::DegenerateTarget:    return "DegenerateTarget";
        case ErrorCode::CannotFit:           return "CannotFit";
        case ErrorCode::IoError:             return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace adamec
