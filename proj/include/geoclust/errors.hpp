#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace geoclust {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape/argument mismatches between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (window lengths, schedules, CLI input).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Grassmann logarithm requested across the cut locus.
class CutLocusError : public Error {
 public:
  CutLocusError(const std::string& msg, double largest_angle)
      : Error(msg), largest_angle_(largest_angle) {}
  double largest_angle() const { return largest_angle_; }

 private:
  double largest_angle_;
};

class NotSpdError : public Error {
 public:
  NotSpdError(const std::string& msg, double min_eigenvalue)
      : Error(msg), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Rank deficiency in a matrix factorization; carries the spectrum.
class RankError : public Error {
 public:
  RankError(const std::string& msg, std::vector<double> singular_values)
      : Error(msg), singular_values_(std::move(singular_values)) {}
  const std::vector<double>& singular_values() const { return singular_values_; }

 private:
  std::vector<double> singular_values_;
};

// Iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& msg, double worst_residual)
      : Error(msg), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

 private:
  double worst_residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical simulation produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& msg, long step)
      : Error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace geoclust
