#pragma once

#include <stdexcept>
#include <string>

namespace meshguard {

// Error taxonomy mirroring the C API status codes.
enum class ErrorKind {
    Io,
    Parse,
    Argument,
    Degenerate,
    Infeasible,
    Numeric,
    Unsupported,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace meshguard
