#pragma once

#include <stdexcept>
#include <string>

namespace pstab {

/// Bad input: a precondition or configuration value was rejected.
/// The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A procedure ran but could not produce a result (no oscillation found,
/// plant not self-regulating, iteration budget exhausted, ...).
/// The CLI maps this to exit code 2.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace pstab
