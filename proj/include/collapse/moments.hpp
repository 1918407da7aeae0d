#pragma once

#include <vector>

#include <Eigen/Dense>

#include "collapse/model.hpp"

namespace collapse {

enum class TangentKind {
  /// {v : 1'v = 0}: the directions the moment map actually sees.
  simplex_tangent,
  /// {v : 1'v = 0, A v = 0}: A annihilates it, so the pushforward is zero.
  constraint_tangent,
};

/// Optimal GMM weight from the information metric.
struct GmmWeight {
  Eigen::MatrixXd w_opt;
  /// A V H^{-1} V' A', H = V' diag(1/p*) V
  Eigen::MatrixXd pushforward;
  TangentKind tangent_kind = TangentKind::simplex_tangent;
};

/// Throws SingularMatrix (with the null direction in moment space) when the
/// pushforward is not invertible.
GmmWeight gmm_weight(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& features,
                     TangentKind kind = TangentKind::simplex_tangent);

/// (n/2) g' W g with g = A (counts/n) - alpha.
double gmm_objective(const TypeVector& data, const Eigen::MatrixXd& features, const Eigen::VectorXd& alpha,
                     const Eigen::MatrixXd& w);

/// One cluster's summary: Jacobian D (q x p), working weight W (q x q) and
/// true covariance Sigma (q x q).
struct GeeCluster {
  Eigen::MatrixXd d;
  Eigen::MatrixXd w;
  Eigen::MatrixXd sigma;
};

struct GeeCurvature {
  Eigen::MatrixXd j;  // mean D' W D
  Eigen::MatrixXd k;  // mean D' W Sigma W D
  Eigen::MatrixXd sandwich;  // J^{-1} K J^{-1}
  double lambda_min_j = 0.0;

  /// sqrt(log n / (n lambda_min(J))).
  double rate_proxy(int n) const;
};

/// Averages in cluster order. Throws SingularMatrix when J is singular.
GeeCurvature gee_curvature(const std::vector<GeeCluster>& clusters);

struct Comparability {
  /// smallest eigenvalue of J - a H
  double lower_margin = 0.0;
  /// smallest eigenvalue of b H - J
  double upper_margin = 0.0;
  bool lower_holds = false;
  bool upper_holds = false;
  bool holds() const { return lower_holds && upper_holds; }
};

/// a H <= J <= b H in the Loewner order (margins >= -1e-10).
Comparability curvature_comparability(const Eigen::MatrixXd& j, const Eigen::MatrixXd& h, double a, double b);

}  // namespace collapse
