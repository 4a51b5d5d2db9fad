#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace foldlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the supported parameter box of a special function.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain (e.g. Gamma at x <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid geometry: overlapping components, non-positive parameters.
class ValidityError : public Error {
 public:
  using Error::Error;
};

// Mesh cannot resolve a feature of the domain at the requested size.
class MeshRefinementError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  AssemblyError(const std::string& what, int triangle)
      : Error(what), triangle_(triangle) {}
  int triangle() const { return triangle_; }

 private:
  int triangle_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Bad user configuration, raised before any computation starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Iterative solver exhausted its budget. Carries the best residuals seen.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> best_residuals = {})
      : Error(what), best_residuals_(std::move(best_residuals)) {}
  const std::vector<double>& best_residuals() const { return best_residuals_; }

 private:
  std::vector<double> best_residuals_;
};

}  // namespace foldlab
