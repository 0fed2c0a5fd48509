#pragma once

#include <stdexcept>
#include <string>

namespace dispatch {

// Base class for all toolkit failures. Subclasses identify which contract broke,
// so callers (and the CLI) can report a category without parsing messages.
struct DispatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or unparseable input file (case JSON, history CSV).
struct SchemaError : DispatchError {
  using DispatchError::DispatchError;
};

// References to undeclared buses, disconnected networks, and similar wiring bugs.
struct TopologyError : DispatchError {
  using DispatchError::DispatchError;
};

// A domain invariant does not hold (bad bounds, unsorted breakpoints, unclipped sample...).
struct InvariantError : DispatchError {
  using DispatchError::DispatchError;
};

// Vector length disagrees with the model it must align with.
struct DimensionError : DispatchError {
  using DispatchError::DispatchError;
};

// An optimization stage failed in a way the caller cannot fix by changing inputs.
struct SolveError : DispatchError {
  using DispatchError::DispatchError;
};

// Strict-mode corrective dispatch has no feasible balancing response.
struct InfeasibleError : SolveError {
  using SolveError::SolveError;
};

}  // namespace dispatch
