#pragma once

#include <stdexcept>

namespace agekit {

/// A precondition or input-domain violation.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed file contents (syntax or schema).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (open, read, write).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure at runtime, e.g. training divergence.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace agekit
