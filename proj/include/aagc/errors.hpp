#pragma once

#include <stdexcept>
#include <string>

namespace aagc {

// Error taxonomy. The CLI maps these onto stable exit codes:
// config/usage -> 2, data format/shape/validation -> 3, I/O -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed caller input: bad flag value, invalid rate, empty sequence, ...
class UsageError : public Error {
public:
    using Error::Error;
};

// Invalid configuration (sizes, durations, generator limits).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Operand shapes incompatible with the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Data fails a domain invariant (non-rotation block, unknown sensor node).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Unrecognized magic/version or structurally malformed file.
class FormatError : public Error {
public:
    using Error::Error;
};

// File recognized but contents inconsistent (truncation, bad record length).
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace aagc
