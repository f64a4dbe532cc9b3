#pragma once

#include <stdexcept>
#include <string>

namespace diolab {

// Thrown when an enumeration or counting loop would exceed its configured
// iteration budget.  The CLI maps this to exit code 3.
struct BudgetExceeded : std::runtime_error {
    explicit BudgetExceeded(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or argument ranges.  CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File read/write failure.  CLI exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kUnimodularTol = 1e-9;
inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kGroupLawTol = 1e-12;

}  // namespace diolab
