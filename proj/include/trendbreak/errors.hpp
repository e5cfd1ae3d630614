#pragma once

#include <stdexcept>
#include <string>

namespace trendbreak {

/// Input sizes do not match what the operation requires.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numeric parameter violates its precondition (negative lambda, bad alpha, ...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A factorization hit a nonpositive pivot; the system is not positive definite.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed external input (files, cells, scenario names).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace trendbreak
