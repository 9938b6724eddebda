#pragma once

#include <stdexcept>
#include <string>

namespace flowlab {

// Base error for everything the library throws.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or bad user input (CLI exit code 2).
struct config_error : error {
    using error::error;
};

// Numerical failure at runtime: non-finite values, diverged solves,
// underflows (CLI exit code 3).
struct numeric_error : error {
    using error::error;
};

// Mismatched tensor shapes or dimensions.
struct shape_error : numeric_error {
    using numeric_error::numeric_error;
};

}  // namespace flowlab
