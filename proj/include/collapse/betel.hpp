#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "collapse/curvature.hpp"
#include "collapse/model.hpp"
#include "collapse/oracle.hpp"
#include "collapse/projection.hpp"

namespace collapse {

/// Exponentially tilted laws P*_theta = argmin_{E_theta} D(P || Q) over a
/// finite parameter grid, E_theta = {P : A P = alpha(theta)}.
struct TiltedFamily {
  ConstrainedModel model;  // template: Q and features
  std::vector<Eigen::VectorXd> theta;
  std::vector<Eigen::VectorXd> alpha;
  std::vector<Projection> projections;
  std::vector<CurvatureReport> curvatures;

  std::size_t size() const { return theta.size(); }
};

/// Solves every grid point. Errors from a single theta are rethrown with the
/// grid index and theta prepended; the error code is preserved. `base`
/// overrides Q as the tilting measure (it need not be normalized).
TiltedFamily build_family(const ConstrainedModel& model_template, std::vector<Eigen::VectorXd> theta_grid,
                          std::vector<Eigen::VectorXd> alpha_values,
                          const std::optional<Eigen::VectorXd>& base = std::nullopt);

TiltedFamily build_family(const ConstrainedModel& model_template, std::vector<Eigen::VectorXd> theta_grid,
                          const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& alpha_map,
                          const std::optional<Eigen::VectorXd>& base = std::nullopt);

enum class PosteriorVariant {
  /// prior(theta) prod_i P*_theta(X_i)
  canonical,
  /// prior(theta) prod_i P*_theta(X_i) exp(lambda_theta' sum_i h(X_i)): the
  /// tilt applied a second time, as the likelihood is sometimes displayed.
  as_printed,
};

struct GridPosterior {
  std::vector<double> prior;
  std::vector<double> log_posterior;  // normalized: logsumexp = 0
  std::vector<double> posterior;
  PosteriorVariant variant = PosteriorVariant::canonical;
  int n_obs = 0;
};

/// Uniform prior when `prior` is empty. Zero prior mass stays zero.
GridPosterior betel_posterior(const TiltedFamily& family, const TypeVector& data, std::span<const double> prior,
                              PosteriorVariant variant = PosteriorVariant::canonical);
/// Sample of 1-based symbols.
GridPosterior betel_posterior(const TiltedFamily& family, std::span<const int> sample, std::span<const double> prior,
                              PosteriorVariant variant = PosteriorVariant::canonical);

struct ConcentrationProfile {
  std::vector<double> radii;
  std::vector<double> tail_mass;  // posterior mass with ||theta - theta0|| > radius
  /// Grid point nearest theta0; its curvature sets the reference radius.
  std::size_t anchor = 0;
  double lambda_min = 0.0;
  /// C sqrt(log n / (n lambda_min(H*_theta0)))
  double reference_radius = 0.0;
  double reference_tail_mass = 0.0;
};

ConcentrationProfile concentration_profile(const GridPosterior& posterior, const TiltedFamily& family,
                                           const Eigen::VectorXd& theta0, std::span<const double> radii,
                                           double c = 1.0);

/// Posterior mixture of (P*_theta)^{(x) m}.
PredictiveLaw betel_predictive(const GridPosterior& posterior, const TiltedFamily& family, int m);

enum class Divergence {
  /// argmin D(P0 || P*_theta)
  forward,
  /// argmin D(P*_theta || P0)
  reverse,
};

struct PseudoTrue {
  std::size_t index = 0;
  double divergence = 0.0;
  /// Another grid point attains the minimum within 1e-12 (smallest index kept).
  bool tie = false;
};

PseudoTrue pseudo_true(const TiltedFamily& family, const Eigen::VectorXd& p0, Divergence direction);

/// n iid draws (1-based symbols) from p using a mt19937_64 seeded with `seed`.
std::vector<int> simulate_sample(const Eigen::VectorXd& p, int n, std::uint64_t seed);

}  // namespace collapse
