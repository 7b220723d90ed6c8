#pragma once

#include <stdexcept>
#include <string>

namespace dot {

// Base of every error raised by the library. Callers that only need a
// diagnostic catch this; tests catch the concrete kinds.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a formula (non-positive
// intensity, path length, optical coefficient, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Point outside the phantom, undefined chord normal, sample outside a grid.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class LayoutTooDenseError : public Error {
 public:
  using Error::Error;
};

// Forward grid too coarse to resolve an inclusion.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double final_residual)
      : Error(what), final_residual_(final_residual) {}
  double final_residual() const noexcept { return final_residual_; }

 private:
  double final_residual_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dot
