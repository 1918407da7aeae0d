#pragma once

#include <Eigen/Dense>

namespace collapse::lp {

enum class Status { optimal, infeasible, unbounded };

struct Solution {
  Status status = Status::infeasible;
  double value = 0.0;  // optimal objective (minimization)
  Eigen::VectorXd x;
};

/// Dense two-phase simplex for
///   minimize cost' x  subject to  a x = b,  x >= 0.
/// Bland's rule throughout, so it terminates on degenerate problems. Meant
/// for the small systems (tens of variables) that hull tests produce.
Solution minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                  const Eigen::VectorXd& cost, double tol = 1e-10);

}  // namespace collapse::lp
