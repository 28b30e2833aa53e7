#pragma once

#include <stdexcept>
#include <string>

namespace amc {

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed argument: bad dimensions, negative conductance, odd-length
/// expanded vector, and the like.
struct invalid_input : error {
    using error::error;
};

/// Matrix is singular to working precision.
struct singular_matrix : error {
    using error::error;
};

/// Neumann series term norms grew instead of shrinking.
struct divergence_error : error {
    using error::error;
};

/// Strict-mode circuit fault: OA saturation or non-convergence.
struct circuit_fault : error {
    using error::error;
};

/// Configuration file failed validation; message names the field.
struct config_error : error {
    using error::error;
};

} // namespace amc
