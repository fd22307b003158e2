#pragma once

#include <stdexcept>
#include <string>

namespace gowid {

enum class ErrorCode {
    io = 1,        // file missing / unreadable / unwritable
    format = 2,    // malformed CSV, JSON or binary file
    config = 3,    // invalid configuration or argument
    shape = 4,     // dimension or width mismatch
    state = 5,     // precondition violated (single-class input, empty table, ...)
    memory = 6,    // memory budget exceeded
    numeric = 7,   // non-finite values where finite ones are required
    internal = 8,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::io: return "io";
        case ErrorCode::format: return "format";
        case ErrorCode::config: return "config";
        case ErrorCode::shape: return "shape";
        case ErrorCode::state: return "state";
        case ErrorCode::memory: return "memory";
        case ErrorCode::numeric: return "numeric";
        case ErrorCode::internal: return "internal";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace gowid
