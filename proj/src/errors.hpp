#pragma once

#include <stdexcept>
#include <string>

namespace scvfp {

// Error taxonomy shared by every module. The C API maps each type to a
// stable status code, the CLI maps them to exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor extents do not match what an operation requires.
struct ShapeError : Error {
    using Error::Error;
};

// A forward value became NaN/Inf, or a metric is undefined for the input.
struct NumericError : Error {
    using Error::Error;
};

// Filesystem-level failure (missing file, unwritable path, short write).
struct IoError : Error {
    using Error::Error;
};

// A file parsed fine at the byte level but violates its format contract
// (bad magic, version mismatch, truncated payload, malformed CSV).
struct FormatError : Error {
    using Error::Error;
};

// Invalid configuration: out-of-range hyperparameter, unknown JSON key,
// inconsistent extents.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace scvfp
