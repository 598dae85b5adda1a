#pragma once

#include <stdexcept>
#include <string>

namespace daforge {

// Invalid or inconsistent run configuration / CLI usage.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative numerical procedure failed to converge within its budget.
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A work budget (vertex count, search cap) was exhausted.
struct budget_error : std::runtime_error {
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Operation called on an object that does not support it
// (non-symmetric matrix, wrong system variant, ...).
struct unsupported_error : std::runtime_error {
    explicit unsupported_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace daforge
