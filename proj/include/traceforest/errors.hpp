#pragma once

#include <stdexcept>
#include <string>

namespace traceforest {

// Base for everything caused by bad input data, bad files, or bad
// configuration. The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input does not match the expected schema (missing header, missing
// column, fingerprint mismatch, ...).
struct SchemaError : DataError {
    explicit SchemaError(const std::string& msg) : DataError(msg) {}
};

// A cell or nested literal could not be parsed.
struct ParseError : DataError {
    explicit ParseError(const std::string& msg) : DataError(msg) {}
};

// Filesystem-level failure (unreadable path, write failure).
struct IoError : DataError {
    explicit IoError(const std::string& msg) : DataError(msg) {}
};

} // namespace traceforest
