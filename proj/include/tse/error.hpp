#pragma once

#include <stdexcept>
#include <string>

namespace tse {

// Base for every error raised by the pipeline. Stage-level wrappers prefix the
// message with the stage name so the CLI can report where a run failed.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, truncated payload, bad header token).
class FormatError : public Error {
public:
    using Error::Error;
};

// PGM maxval other than 255.
class UnsupportedDepthError : public FormatError {
public:
    using FormatError::FormatError;
};

// A stored value lies outside its admissible interval.
class RangeError : public Error {
public:
    using Error::Error;
};

// Per-pixel class probabilities do not sum to one.
class NormalizationError : public Error {
public:
    using Error::Error;
};

// A precondition of an operation was violated by its caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// Phantom geometry that cannot be realised (tumor outside the mammary band, bad area).
class GeometryError : public Error {
public:
    using Error::Error;
};

// Bad configuration text or command line.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace tse
