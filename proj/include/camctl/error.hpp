#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace camctl {

// Base for everything this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller handed us something that violates a documented precondition.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(what) {}
};

// Malformed external data. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what), line_(0) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace camctl
