#pragma once

#include <stdexcept>
#include <string>

namespace giant {

// A numeric argument lies outside the domain where the operation is defined
// (probability outside [0,1], non-positive tolerance, subcritical input to a
// supercritical-only routine, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input data, e.g. an edge endpoint outside [1, n].
class InputError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A documented precondition on the *combination* of arguments does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Experiment or CLI configuration is unusable (missing file, unknown key,
// quantitative window violated).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
  }
}

}  // namespace detail

}  // namespace giant
