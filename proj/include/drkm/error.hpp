#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drkm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Non-square, asymmetric or non-finite matrix handed to a routine that needs one.
class InvalidMatrix : public Error {
public:
    using Error::Error;
};

/// The stacked hidden features cannot have orthonormal rows (N < sum of s_l).
class InfeasibleConstraint : public Error {
public:
    using Error::Error;
};

/// NaN/Inf appeared in the objective or gradient during training.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t round)
        : Error(what + " (outer round " + std::to_string(round) + ")"), round_(round) {}

    std::size_t round() const noexcept { return round_; }

private:
    std::size_t round_;
};

/// Fixed-point pre-image iteration hit a vanishing normalizer.
class PreimageCollapse : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace drkm
