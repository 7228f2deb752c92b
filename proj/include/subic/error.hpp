#pragma once

#include <stdexcept>

namespace subic {

// Base class of all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mismatched shapes, sizes or argument ranges.
struct dim_error : error {
    using error::error;
};

// Malformed, truncated or foreign file contents.
struct format_error : error {
    using error::error;
};

// Non-finite values or diverging computations.
struct numeric_error : error {
    using error::error;
};

}  // namespace subic
