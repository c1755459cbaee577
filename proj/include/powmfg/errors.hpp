#pragma once

#include <stdexcept>
#include <string>

namespace powmfg {

// Raised when an argument lies outside the model's domain (beta >= 1, k < 0, ...).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Raised by the solver when an objective or transition evaluates to NaN/inf.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace detail
}  // namespace powmfg
