#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afield {

// Base of every error thrown by the library. The C API maps each subclass to
// an afield_status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed input whose shape does not match what was expected
// (dimension mismatch, missing JSON keys, ...).
class SchemaError : public Error {
public:
    using Error::Error;
};

// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {
inline void require(bool cond, const char* what) {
    if (!cond) throw ContractViolation(what);
}
} // namespace detail

} // namespace afield
