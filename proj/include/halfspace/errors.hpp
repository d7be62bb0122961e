#pragma once

#include <stdexcept>
#include <string>

namespace halfspace {

// Error taxonomy shared by all modules. Every failure mode named in a module
// contract maps to exactly one of these types so callers (and the CLI exit
// code logic) can dispatch on the class.

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Configuration / input problems (CLI exit code 3).
struct ConfigError : Error {
  using Error::Error;
};
struct SpecError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct ReportVersionError : Error {
  using Error::Error;
};

// Numerical / construction problems (CLI exit code 4 unless an invariant
// certificate already captured the failure, which reports as exit code 2).
struct NumericalFailure : Error {
  using Error::Error;
};
struct SingularResolvent : NumericalFailure {
  using NumericalFailure::NumericalFailure;
};
struct ApproachFailure : Error {
  using Error::Error;
};
struct SelectionExhausted : Error {
  using Error::Error;
};
struct ConstructionError : Error {
  using Error::Error;
};
struct BudgetExhausted : Error {
  using Error::Error;
};
struct OracleIncomplete : Error {
  using Error::Error;
};
struct RangeNotClosed : Error {
  using Error::Error;
};

}  // namespace halfspace
