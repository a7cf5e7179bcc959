#pragma once

#include <stdexcept>
#include <string>

namespace segclass {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files, malformed binary payloads.
class IoError : public Error {
public:
    using Error::Error;
};

// Domain invariant violations: unknown label codes, bad shapes, invalid records.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad run configuration: unknown keys, out-of-range values, unknown adapter ids.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Metric preconditions that cannot be met (e.g. AUC on single-class truth).
class EvalError : public Error {
public:
    using Error::Error;
};

// Incomplete or mismatched checkpoint directories.
class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace segclass
