#pragma once

#include <stdexcept>
#include <string>

namespace wakd {

// Base for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration: mismatched dimensions, bad specs, unknown config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Invalid argument values: tau <= 0, label out of range, empty inputs.
class DomainError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Writing a checkpoint at an iteration that already exists.
class ConflictError : public Error {
public:
    using Error::Error;
};

// Requested checkpoint / record does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// A file failed to parse; the message names the offending field.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem failures, with path context in the message.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace wakd
