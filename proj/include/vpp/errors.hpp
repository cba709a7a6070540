#pragma once

#include <stdexcept>

namespace vpp {

/// Base for failures of the numerics themselves (as opposed to bad input).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The balance multiplier is not unique at the requested operating point.
class DegenerateDualError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Condition C1 fails, so the decentralized iteration cannot settle.
class ConditionC1Error : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace vpp
