#pragma once

#include <stdexcept>
#include <string>

namespace wchaos {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid map parameters or malformed descriptors (z < 2, a outside (0,1), ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A point lies outside the domain of the map it is handed to.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested accuracy cannot be certified at the available precision.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// A precision request exceeded a configured hard cap.
class ResourceError : public PrecisionError {
 public:
  using PrecisionError::PrecisionError;
};

/// The operation has no exact-arithmetic implementation for this map.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An orbit point could not be assigned to any cover element.
class CodingError : public Error {
 public:
  using Error::Error;
};

/// A point is not covered by the net it is described against.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Too few samples for the requested statistic.
class SampleSizeError : public Error {
 public:
  using Error::Error;
};

/// A scale list is unusable for the point set (too fine, too narrow, not decreasing).
class ScaleError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent arguments, e.g. comparing indicators fitted under different clocks.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace wchaos
