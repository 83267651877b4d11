#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snsde {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape or grid mismatch between operands.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A precondition on an operation's input was violated.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Time step / lattice incompatibility (non-dyadic step, lattice too coarse, off-lattice time).
class LatticeError : public Error {
public:
  using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// The implicit solve of a time step did not converge.
class SolverError : public Error {
public:
  SolverError(const std::string& what, std::size_t iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

private:
  std::size_t iterations_;
  double residual_;
};

}  // namespace snsde
