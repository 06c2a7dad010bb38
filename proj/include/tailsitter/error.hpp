#pragma once

#include <stdexcept>
#include <string>

namespace tailsitter {

enum class ErrorKind {
    invalid_argument,
    config,
    io,
    numerical,
    format,
    // weight-file specific
    shape_mismatch,
    non_finite,
    unknown_activation,
    version_mismatch,
};

inline const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::format: return "format";
    case ErrorKind::shape_mismatch: return "shape mismatch";
    case ErrorKind::non_finite: return "non-finite value";
    case ErrorKind::unknown_activation: return "unknown activation";
    case ErrorKind::version_mismatch: return "version mismatch";
    }
    return "unknown";
}

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace tailsitter
