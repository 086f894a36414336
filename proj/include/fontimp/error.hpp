#pragma once

#include <stdexcept>
#include <string>

namespace fontimp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Merge rules that overlap, cycle, or reference missing tags.
class RuleError : public Error {
public:
    RuleError(std::string key, const std::string& what)
        : Error("merge rule '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Input that violates a precondition (length mismatch, bad parameter, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input files.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace fontimp
