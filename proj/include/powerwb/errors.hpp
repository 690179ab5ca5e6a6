#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace powerwb {

// Invalid argument: out-of-range probability, nonpositive df, bad sizes, ...
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical routine exhausted its iteration budget or failed its own
// post-condition. Never swallowed: a wrong answer is worse than no answer.
class InternalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The a-priori search cannot reach the requested power (zero effect, or the
// sample size would exceed the hard cap).
class UnreachableTarget : public std::runtime_error {
public:
    UnreachableTarget(const std::string& what, std::int64_t cap)
        : std::runtime_error(what), cap_(cap) {}

    std::int64_t cap() const noexcept { return cap_; }

private:
    std::int64_t cap_;
};

// Malformed CSV input. Line and column are 1-based; column 0 means "whole line".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : std::runtime_error(format(message, line, column)),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& message, std::size_t line, std::size_t column) {
        std::string out = "line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
};

}  // namespace powerwb
