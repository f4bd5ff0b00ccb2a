#pragma once

#include <stdexcept>
#include <string>

namespace occlab {

/// Invalid parameters or configuration. Raised before any computation starts.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A quadrature, finite-difference or series budget was exhausted.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace occlab
