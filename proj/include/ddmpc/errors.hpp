#pragma once

#include <stdexcept>
#include <string>

namespace ddmpc {

// Base class for all library failures. Subclasses map onto the CLI exit
// codes: config_error and io_error -> 2, everything else numerical -> 3.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or index mismatch between sequences, matrices, or blocks.
class dimension_error : public error {
 public:
  explicit dimension_error(const std::string& what) : error(what) {}
};

// Failure to produce a persistently exciting input within the retry budget.
class excitation_error : public error {
 public:
  explicit excitation_error(const std::string& what) : error(what) {}
};

// A constant estimator could not produce a value (degenerate data,
// unbounded bisection, infeasible vertex subproblem).
class estimation_error : public error {
 public:
  explicit estimation_error(const std::string& what) : error(what) {}
};

// Convex solver failures other than honest infeasibility detection.
class solver_error : public error {
 public:
  explicit solver_error(const std::string& what) : error(what) {}
};

// OCP reported infeasible where the caller required feasibility.
class feasibility_error : public error {
 public:
  explicit feasibility_error(const std::string& what) : error(what) {}
};

// Configuration file or flag validation failure; names the offending field.
class config_error : public error {
 public:
  explicit config_error(const std::string& what) : error(what) {}
};

// File IO and serialization failures.
class io_error : public error {
 public:
  explicit io_error(const std::string& what) : error(what) {}
};

// An oracle-only operation was invoked on a dataset without oracle records.
class oracle_unavailable_error : public error {
 public:
  explicit oracle_unavailable_error(const std::string& what) : error(what) {}
};

}  // namespace ddmpc
