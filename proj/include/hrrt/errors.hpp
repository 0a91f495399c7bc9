#pragma once

#include <stdexcept>
#include <string>

namespace hrrt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A point or cell index outside the half-open map domain.
struct BoundsError : Error {
  using Error::Error;
};

/// Malformed PNG, unknown pixel color, or inconsistent overlay.
struct DecodeError : Error {
  using Error::Error;
};

/// A heatmap with no positive mass on free cells.
struct EmptyDistributionError : Error {
  using Error::Error;
};

/// Ground-truth generation found no path at all.
struct EmptyGroundTruthError : Error {
  using Error::Error;
};

/// A configuration value violates its documented invariant.
struct ConfigError : Error {
  using Error::Error;
};

struct InternalError : Error {
  using Error::Error;
};

}  // namespace hrrt
