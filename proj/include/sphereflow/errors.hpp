#pragma once

#include <stdexcept>
#include <string>

namespace sphereflow {

// Error hierarchy. Every failure mode of the library maps onto one of
// these; callers that need to distinguish catch the concrete type.

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (unsupported dimension, resolution, schema, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Input outside the mathematical domain of an operation (graph invariants
// violated, speed function evaluated outside its cone, ...).
struct DomainError : Error {
  using Error::Error;
};

// Metric not invertible at some node.
struct SingularMetricError : Error {
  using Error::Error;
};

// Weight combination vanishes on the base sphere.
struct DegenerateWeightError : Error {
  using Error::Error;
};

// Flow solution left the graph domain.
struct DegenerateGraphError : Error {
  using Error::Error;
};

// Iterative solver failed to converge.
struct NoConvergenceError : Error {
  using Error::Error;
};

// Not enough data to perform a measurement.
struct InsufficientDataError : Error {
  using Error::Error;
};

// Branch selection in the sphere graph formula failed its consistency check.
struct BranchError : Error {
  using Error::Error;
};

}  // namespace sphereflow
