#pragma once

#include <stdexcept>
#include <string>

namespace hypbridge {

// Invalid input to a library operation (violated precondition).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its accuracy target (series or
// quadrature non-convergence, overflow in a transform, ...).
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace detail
}  // namespace hypbridge
