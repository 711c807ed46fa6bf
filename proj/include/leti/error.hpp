// Copyright (c) 2026, The leti-engine Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy. Validation and parse errors describe bad input;
// infrastructure errors describe a broken environment (missing interpreter,
// unreachable endpoint) and must never be recorded as a solution failure.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leti {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
          line_(line) {}

    /// 1-based line number, or 0 when the error is not line-oriented.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InfrastructureError : public Error {
public:
    using Error::Error;
};

class TransportError : public InfrastructureError {
public:
    TransportError(const std::string& what, int attempts)
        : InfrastructureError(what + " (after " + std::to_string(attempts) + " attempt(s))"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

}  // namespace leti
