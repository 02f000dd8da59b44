#pragma once

#include <stdexcept>
#include <string>

namespace xbar {

/// Input rejected by a precondition check (shape mismatch, bad parameter).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced a NaN or infinity.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xbar
