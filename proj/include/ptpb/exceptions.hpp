#pragma once

#include <stdexcept>
#include <string>

namespace ptpb {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector/matrix sizes do not agree with the declared degrees of freedom.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates a documented precondition (non-finite, out of range, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

/// The mass matrix is not symmetric positive definite at the queried state.
class SingularMassError : public Error {
 public:
  using Error::Error;
};

/// A constraint box is empty or malformed (lower >= upper, zero not interior to input box).
class EmptyBoxError : public Error {
 public:
  using Error::Error;
};

/// The filtered error reached or exceeded the barrier bound; the gain is unbounded there.
class BarrierBreachError : public Error {
 public:
  using Error::Error;
};

/// The shrunk velocity corridor is empty: upper margin minus the safety margin
/// fell below the lower margin plus the safety margin.
class InfeasibleMarginError : public Error {
 public:
  using Error::Error;
};

/// A decay rate lies outside the admissible window for the given horizon and box.
class InvalidSigmaError : public Error {
 public:
  using Error::Error;
};

/// A sampled or analytic region is empty where a nonempty one is required.
class EmptyRegionError : public Error {
 public:
  using Error::Error;
};

/// The steady-state window contains no samples (run shorter than the settling horizon).
class InsufficientWindowError : public Error {
 public:
  using Error::Error;
};

/// A square-root filter scale dropped to (numerically) zero; the mode is undefined there.
class SingularScaleError : public Error {
 public:
  using Error::Error;
};

/// A configuration file cannot be parsed or violates the schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A parsed configuration is well-formed but describes an invalid or infeasible run.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace ptpb
