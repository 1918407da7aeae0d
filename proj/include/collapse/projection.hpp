#pragma once

#include <Eigen/Dense>

#include "collapse/model.hpp"

namespace collapse {

/// Information projection of a base measure onto {P : A P = alpha}.
///
/// Sign convention: p_star(x) = base(x) exp(lambda_star' h(x)) / Z, i.e. a
/// positive tilt. The multiplier of the Lagrangian written with exp(-theta' h)
/// is theta = -lambda_star.
struct Projection {
  Eigen::VectorXd lambda_star;
  Eigen::VectorXd p_star;
  double log_Z = 0.0;
  /// lambda' alpha - log Z at the optimum; equals D(p_star || base) for a
  /// normalized base.
  double dual_value = 0.0;
  int iterations = 0;
  /// ||A p_star - alpha||_inf
  double kkt_residual = 0.0;

  double p_min() const { return p_star.minCoeff(); }
  double p_max() const { return p_star.maxCoeff(); }
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 200;
  double armijo = 1e-4;
};

/// base(x) exp(lambda' h(x)) normalized, evaluated in log space. `base`
/// need not sum to one.
Eigen::VectorXd tilted_distribution(const ConstrainedModel& model, const Eigen::VectorXd& base,
                                    const Eigen::VectorXd& lambda);

/// Damped Newton ascent on g(lambda) = lambda' alpha - log sum base e^{lambda' h}
/// starting from lambda = 0, with Armijo backtracking (halving). Stops when
/// ||alpha - E_lambda[h]||_inf <= tol.
///
/// Throws MaxIterations, SingularHessian, or BoundaryAlpha. The latter fires
/// when ||lambda||_inf exceeds 1e3 log(1/tol), when the tilted law collapses
/// onto a face mid-iteration, or when the converged law has an entry below
/// 1e3 tol (alpha numerically on the hull boundary).
Projection dual_newton(const ConstrainedModel& model, const Eigen::VectorXd& base,
                       const SolverOptions& opts = {});

/// dual_newton with base = Q after confirming alpha is strictly interior.
Projection project(const ConstrainedModel& model, const SolverOptions& opts = {});

/// sum P log(P/Q) with 0 log 0 = 0. Throws ZeroProbability when Q(x) = 0 < P(x).
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace collapse
