#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dosekit {

enum class ErrorKind {
    invalid_argument,
    empty_input,
    infeasible,
    parse,
    duplicate_key,
    truncated,
    undefined,
    not_converged,
    missing_key,
    io,
    config,
};

std::string_view error_kind_name(ErrorKind kind);

// Single exception type for every module. `line` is 1-based and only set by
// file readers.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::size_t line = 0)
        : std::runtime_error(message), kind_(kind), line_(line) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::size_t line() const noexcept { return line_; }

private:
    ErrorKind kind_;
    std::size_t line_;
};

}  // namespace dosekit
