#pragma once

#include <stdexcept>
#include <string>

namespace crmsbm {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Quadrature failure, NaN propagation, or other floating point breakdown.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configured size cap (atoms, edges) would be exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace crmsbm
