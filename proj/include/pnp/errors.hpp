#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pnp {

// Base class for everything this library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class WrongDimension : public Error {
 public:
  using Error::Error;
};

// Right-hand side handed to the Poisson solver carries a mean larger than
// the gate; upstream charge bookkeeping is broken.
class NonZeroMean : public Error {
 public:
  NonZeroMean(double mean, double gate)
      : Error("right-hand side has nonzero mean " + std::to_string(mean) +
              " (gate " + std::to_string(gate) + ")"),
        mean(mean),
        gate(gate) {}
  double mean;
  double gate;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, int iterations, double residual)
      : Error(what + ": no convergence after " + std::to_string(iterations) +
              " iterations, residual " + std::to_string(residual)),
        iterations(iterations),
        residual(residual) {}
  int iterations;
  double residual;
};

class NonPositiveCoefficient : public Error {
 public:
  using Error::Error;
};

class NonPositiveConcentration : public Error {
 public:
  using Error::Error;
};

// The Picard iteration left the positive cone twice in a row; the time step
// is too large for the inner iteration (the scheme itself is positivity
// preserving for any dt, the iterate path is not).
class PositivityLoss : public Error {
 public:
  PositivityLoss(std::size_t cell, double value)
      : Error("iterate lost positivity at cell " + std::to_string(cell) +
              " (value " + std::to_string(value) + "); reduce dt"),
        cell(cell),
        value(value) {}
  std::size_t cell;
  double value;
};

class PicardNoConvergence : public Error {
 public:
  PicardNoConvergence(int iterations, double residual)
      : Error("fixed-point iteration stalled after " +
              std::to_string(iterations) + " iterations, increment " +
              std::to_string(residual)),
        iterations(iterations),
        residual(residual) {}
  int iterations;
  double residual;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& reason)
      : Error(key + ": " + reason), key(key) {}
  std::string key;
};

}  // namespace pnp
