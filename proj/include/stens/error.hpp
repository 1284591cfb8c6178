#pragma once

#include <stdexcept>
#include <string>

namespace stens {

enum class ErrorKind {
    InvalidInput,  // malformed files, bad parameters
    NotFound,      // unknown run, measurable, key
    Conflict,      // request is well-formed but contradicts the data model
};

/// Error raised for every recoverable failure in the library.
/// `param` names the offending parameter or file when one is known.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::string param = {})
        : std::runtime_error(message), kind_(kind), param_(std::move(param)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& param() const noexcept { return param_; }

private:
    ErrorKind kind_;
    std::string param_;
};

inline Error input_error(const std::string& message, std::string param = {}) {
    return Error(ErrorKind::InvalidInput, message, std::move(param));
}

inline Error not_found(const std::string& message, std::string param = {}) {
    return Error(ErrorKind::NotFound, message, std::move(param));
}

inline Error conflict(const std::string& message, std::string param = {}) {
    return Error(ErrorKind::Conflict, message, std::move(param));
}

const char* to_string(ErrorKind kind);

} // namespace stens
