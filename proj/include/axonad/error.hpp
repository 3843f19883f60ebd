#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace axonad {

/// Error categories. Every CLI failure is reported as `<code>: <message>` on
/// a single line, where `<code>` is one of the `E_*` names below.
enum class ErrorCode {
    config,      // invalid configuration value or unknown key
    parse,       // malformed input file
    io,          // unreadable / unwritable path
    shape,       // tensor or data shape mismatch
    numeric,     // non-finite values where finite ones are required
    hygiene,     // split hygiene violation (labels inside the nominal prefix)
    metric,      // metric undefined for the given input
    checkpoint,  // corrupted or incompatible checkpoint
    usage,       // bad command-line usage
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::config: return "E_CONFIG";
        case ErrorCode::parse: return "E_PARSE";
        case ErrorCode::io: return "E_IO";
        case ErrorCode::shape: return "E_SHAPE";
        case ErrorCode::numeric: return "E_NUMERIC";
        case ErrorCode::hygiene: return "E_HYGIENE";
        case ErrorCode::metric: return "E_METRIC";
        case ErrorCode::checkpoint: return "E_CHECKPOINT";
        case ErrorCode::usage: return "E_USAGE";
    }
    return "E_UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace axonad
