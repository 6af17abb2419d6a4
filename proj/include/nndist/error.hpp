#pragma once

#include <stdexcept>
#include <string>

namespace nndist {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed config, out-of-range argument, infeasible radii.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Dimension mismatch between a network spec, its parameters, or its inputs.
class ShapeError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A CSV or JSON document is missing a required field or column.
class SchemaError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Non-finite objective, quadrature non-convergence, degenerate regression.
class NumericalError : public Error {
public:
  using Error::Error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace nndist
