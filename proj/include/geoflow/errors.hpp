#pragma once

#include <stdexcept>
#include <string>

namespace geoflow {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition (open mesh, bad parameter, ...).
struct PreconditionError : Error {
  using Error::Error;
};

// Requested construction exceeds a configured size cap.
struct SizeError : Error {
  using Error::Error;
};

// Geometric degeneracy: zero-area face, vanishing vertex normal, ...
struct DegenerateElementError : Error {
  using Error::Error;
};

// Field length does not match the mesh it is paired with.
struct ShapeError : Error {
  using Error::Error;
};

// File could not be parsed; carries a 1-based line number.
struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
  long line_number;
};

// Sparse factorization failed (singular or rank-deficient matrix).
struct SolverError : Error {
  using Error::Error;
};

// Newton iteration exhausted its iteration budget.
struct NonConvergenceError : Error {
  using Error::Error;
};

// Averaged tangent pair at a vertex is numerically parallel.
struct ConditioningError : Error {
  using Error::Error;
};

// A time step produced a degenerate mesh.
struct MeshCollapseError : Error {
  MeshCollapseError(const std::string& msg, int step)
      : Error(msg), step_index(step) {}
  int step_index;
};

// Convergence-study protocol violated (too few levels, free tau, ...).
struct ProtocolError : Error {
  using Error::Error;
};

}  // namespace geoflow
