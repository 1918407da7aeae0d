#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "collapse/model.hpp"
#include "collapse/projection.hpp"

namespace collapse {

/// Orthonormal basis (k x r) of T = {v : 1'v = 0, A v = 0}.
struct TangentBasis {
  Eigen::MatrixXd v;
  bool zero_dimensional = false;
  int dim() const { return static_cast<int>(v.cols()); }
};

TangentBasis tangent_basis(const ConstrainedModel& model);
/// Null space of the stacked rows [1'; constraints], computed by a
/// column-pivoted Householder QR of its transpose.
TangentBasis tangent_basis(const Eigen::MatrixXd& constraints, int k);

/// V' diag(1/p) V, symmetrized.
Eigen::MatrixXd projected_hessian(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& v);

struct Spectrum {
  double lambda_min = 0.0;
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors;  // columns match `eigenvalues`
};

/// Full symmetric eigendecomposition. Throws NotPositiveDefinite when an
/// eigenvalue is below -1e-10.
Spectrum min_eigenvalue(const Eigen::MatrixXd& h);

struct SpectralBounds {
  /// r / tr(H^{-1}): the harmonic mean of the spectrum.
  double harmonic_mean = 0.0;
  double trace = 0.0;
  double trace_inverse = 0.0;
  double determinant = 1.0;
  double lambda_min = 0.0;
  /// All eigenvalues equal within 1e-9 (relative).
  bool isotropic = false;
  /// Whether lambda_min >= r / tr(H^{-1}) holds (within 1e-9). In general
  /// the harmonic mean dominates lambda_min, so this is true only in the
  /// isotropic case; it is reported, never enforced.
  bool traceinv_lower_bound_holds = false;
};

SpectralBounds spectral_bounds(const Eigen::MatrixXd& h, int r);

struct CurvatureReport {
  Eigen::MatrixXd v;
  Eigen::MatrixXd h_star;
  Eigen::VectorXd spectrum;  // descending
  /// +inf when the feasible set is a single point (r = 0).
  double lambda_min = 0.0;
  double trace_h = 0.0;
  double trace_hinv = 0.0;
  double det_h = 1.0;
  double lower_bound_traceinv = 0.0;
  std::pair<double, double> compression_bounds{0.0, 0.0};  // (1/p_max, 1/p_min)
  bool zero_dimensional = false;
  int r() const { return static_cast<int>(v.cols()); }
};

CurvatureReport curvature_report(const ConstrainedModel& model, const Projection& proj);

struct LanfordWindow {
  double rho_n = 0.0;
  double radius_euclidean = 0.0;  // rho_n / sqrt(n)
  int n = 0;
};

/// rho_n = sqrt(2 log n / lambda_min). lambda_min = +inf gives rho_n = 0.
LanfordWindow lanford_radius(double lambda_min, int n);

/// ||P - p_star||_2 <= radius (inclusive).
bool window_member(const TypeVector& type, const Eigen::VectorXd& p_star, const LanfordWindow& window);

/// m^2 log(1/eps) / (eps^2 lambda_min), before rounding.
double sample_size_requirement(int m, double epsilon, double lambda_min);
/// ceil of sample_size_requirement.
std::int64_t sample_size_plan(int m, double epsilon, double lambda_min);

/// m sqrt(log n / (n lambda_min)).
double collapse_rate_term(int m, int n, double lambda_min);

struct Tempering {
  double temperature = 1.0;
  double effective_lambda_min = 0.0;
};

/// T = 1 + beta log(1 + lambda_hat / lambda0); the tempered curvature is
/// lambda_hat / T.
Tempering temper(double lambda_hat, double beta = 1.0, double lambda0 = 1.0);

struct Perturbation {
  enum class Target { alpha, reference } target = Target::alpha;
  int coordinate = 0;  // alpha row, or -1 for the reference step
  double sign = 1.0;
  double lambda_min = 0.0;
  double delta_lambda_min = 0.0;
  /// ||H_perturbed - H||_2
  double delta_h_norm = 0.0;
  bool weyl_ok = true;
};

struct StabilityReport {
  double delta = 0.0;
  double lambda_min = 0.0;
  double max_abs_change = 0.0;
  /// max |delta lambda_min| / delta at step delta.
  double lipschitz = 0.0;
  /// The same perturbations at delta/2 stay within lipschitz * delta/2
  /// (10% slack for curvature of the map).
  bool lipschitz_ok = true;
  bool weyl_ok = true;
  std::vector<Perturbation> perturbations;
};

/// Recomputes lambda_min after moving each alpha coordinate by +-delta and
/// after mixing Q toward the uniform law by delta. V depends only on A, so
/// every perturbed Hessian lives in the same basis and Weyl's inequality
/// |d lambda_min| <= ||dH||_2 applies directly. Throws InfeasibleAlpha or
/// BoundaryAlpha if a perturbed alpha leaves the hull interior.
StabilityReport perturbation_stability(const ConstrainedModel& model, double delta = 1e-6);

}  // namespace collapse
