#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsint {

/// A point or interval falls outside the domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A theorem hypothesis (sign, monotonicity, continuity, parameter range)
/// does not hold for the supplied inputs.
class HypothesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an internal consistency check on monotonicity metadata fails.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                             ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace rsint
