// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The trchipnet Authors

#pragma once

#include <stdexcept>
#include <string>

namespace trchipnet {

/// Invalid input to a library operation (violated precondition or invariant).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number of the offending row.
class ParseError : public Error {
public:
    ParseError(const std::string& path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace trchipnet
