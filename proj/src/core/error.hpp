#pragma once

#include <stdexcept>
#include <string>

namespace nnas {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    Io,
    Format,
    Numeric,
};

// Library-wide error type. The C wrapper maps ErrorKind onto status codes,
// so every throw site picks the kind that describes the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        throw Error(kind, message);
    }
}

} // namespace nnas
