#pragma once

#include <stdexcept>
#include <string>

namespace dlr {

enum class ErrorKind {
    InvalidDimension,
    InvalidParameter,
    InvalidRegion,
    InvalidConfig,
    DegenerateConditional,
    ModelTooLarge,
    UnsupportedModel,
    UnsupportedSize,
    UnsupportedSchedule,
    LogOfZero,
    InconsistentBeliefs,
    BadBracket,
    Oscillation,
    DiagnosticFailure,
    Io,
    Schema,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace dlr
