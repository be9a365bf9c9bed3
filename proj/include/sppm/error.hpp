#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sppm {

/// Bad caller input: shapes, ranges, non-finite entries.
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Singular matrices, failed brackets, non-convergent numerics.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem size beyond the exhaustive-enumeration ceiling.
class capacity_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Evaluation outside the convergence domain of a series.
class domain_error : public numeric_error {
 public:
  domain_error(const std::string& what, double threshold)
      : numeric_error(what), threshold_(threshold) {}
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

/// No converged solution in a multistart run.
class solver_error : public numeric_error {
 public:
  solver_error(const std::string& what, std::vector<double> residuals)
      : numeric_error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// A parameter scan whose predicate never fired.
class scan_error : public numeric_error {
 public:
  using numeric_error::numeric_error;
};

}  // namespace sppm
