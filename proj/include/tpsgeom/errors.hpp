#pragma once

#include <stdexcept>
#include <string>

namespace tpsgeom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or argument (bad k, resolution, flags, id mismatch).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Zero-area or self-intersecting geometry.
class DegenerateShape : public Error {
 public:
  using Error::Error;
};

/// Annotation that violates the polygon or side-split contract.
class MalformedAnnotation : public Error {
 public:
  using Error::Error;
};

/// Least-squares system too ill-conditioned to solve.
class SingularFit : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// No valid instance survived ingestion.
class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

}  // namespace tpsgeom
