#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace collapse {

enum class ErrorCode {
  invalid_model,
  inconsistent_constraints,
  infeasible_alpha,
  boundary_alpha,
  max_iterations,
  singular_hessian,
  zero_probability,
  not_positive_definite,
  invalid_argument,
  out_of_range_symbol,
  enumeration_guard,
  empty_feasible_set,
  empty_window,
  shape_mismatch,
  singular_matrix,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Base error for every failure raised by the library. Carries a stable
/// code so that callers (and the CLI) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// No lattice type satisfies the constraints within tau.
class EmptyFeasibleSet : public Error {
 public:
  EmptyFeasibleSet(double min_tau, const std::string& what)
      : Error(ErrorCode::empty_feasible_set, what), min_tau_(min_tau) {}
  /// Smallest tolerance that would admit at least one type.
  double min_tau() const noexcept { return min_tau_; }

 private:
  double min_tau_;
};

/// A matrix that must be inverted is (numerically) singular. `direction`
/// is a unit vector spanning the offending null direction.
class SingularMatrix : public Error {
 public:
  SingularMatrix(Eigen::VectorXd direction, const std::string& what)
      : Error(ErrorCode::singular_matrix, what), direction_(std::move(direction)) {}
  const Eigen::VectorXd& direction() const noexcept { return direction_; }

 private:
  Eigen::VectorXd direction_;
};

}  // namespace collapse
