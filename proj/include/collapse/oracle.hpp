#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "collapse/curvature.hpp"
#include "collapse/model.hpp"
#include "collapse/projection.hpp"

namespace collapse {

/// Refuse to enumerate more than this many lattice types.
inline constexpr std::uint64_t kMaxTypes = 100'000'000;
/// Refuse dense predictive tables with more than this many cells.
inline constexpr std::uint64_t kMaxTableCells = 10'000'000;

/// C(n + k - 1, k - 1), saturating at UINT64_MAX.
std::uint64_t type_count(int n, int k);

/// Walks all compositions of n into k nonnegative parts in descending
/// lexicographic order: (n,0,..,0) first, (0,..,0,n) last.
class TypeEnumerator {
 public:
  /// Throws EnumerationGuard when type_count(n, k) > kMaxTypes.
  TypeEnumerator(int n, int k);
  const TypeVector& current() const { return cur_; }
  /// Advances; returns false once the last composition has been visited.
  bool next();

 private:
  TypeVector cur_;
};

std::vector<TypeVector> enumerate_types(int n, int k);

/// Feasible types of size n with their conditional multinomial weights.
struct TypeEnsemble {
  int n = 0;
  int k = 0;
  double tau = 0.0;
  std::vector<TypeVector> types;
  /// log n! - sum log c_x! + sum c_x log Q(x)
  std::vector<double> log_weights;
  /// exp(log_weights) normalized over the ensemble
  std::vector<double> weights;
  std::size_t size() const { return types.size(); }
};

/// Half a lattice step through the feature map, B / (2n).
double default_tau(const ConstrainedModel& model, int n);

/// Types with ||A c/n - alpha||_inf <= tau. Throws EmptyFeasibleSet carrying
/// the smallest tau that admits a type.
TypeEnsemble feasible_types(const ConstrainedModel& model, int n, std::optional<double> tau = std::nullopt);

enum class LawKind { exact, gaussian_mixture, product_benchmark };

/// Law of m symbols, dense over all k^m sequences in lexicographic order
/// with the first symbol most significant.
struct PredictiveLaw {
  int k = 0;
  int m = 0;
  LawKind kind = LawKind::exact;
  std::vector<double> table;

  /// Probability of a sequence of 0-based symbols.
  double at(std::span<const int> seq) const;
};

/// Index of a 0-based sequence in a PredictiveLaw table.
std::size_t sequence_index(std::span<const int> seq, int k);
std::vector<int> sequence_at(std::size_t index, int k, int m);

/// Sequential draws without replacement from an urn holding `type`.
PredictiveLaw without_replacement_law(const TypeVector& type, int m);
/// P^{(x) m}
PredictiveLaw product_law(const Eigen::VectorXd& p, int m);
/// Weight-mixed without_replacement_law over the ensemble.
PredictiveLaw predictive_exact(const TypeEnsemble& ensemble, int m);

/// (1/2) sum |p - q|.
double tv_distance(const PredictiveLaw& p, const PredictiveLaw& q);

struct HypergeometricCheck {
  double tv = 0.0;
  double bound = 0.0;
  bool ok = true;
};

/// TV between the urn law and the product of counts/n, against
/// m(m-1) / (2 n p_min).
HypergeometricCheck hypergeometric_bound_check(const TypeVector& type, int m);

struct MixtureApproximation {
  PredictiveLaw law;
  /// r = 0: the law is exactly (P*)^{(x) m}.
  bool degenerate = false;
  int nodes_used = 0;
  int nodes_discarded = 0;
  double spacing = 0.0;
};

/// Quadrature of the tangent Gaussian mixture: nodes on a regular grid of
/// spacing 2 rho_n / 21 inside the ball ||v|| <= rho_n + 2 spacings, weight
/// phi_H(v) times cell volume, chart P(v) = P* + V v / sqrt(n). Nodes with a
/// non-positive coordinate are dropped and weights renormalized. r <= 3.
MixtureApproximation gaussian_mixture_approx(const ConstrainedModel& model, const Projection& proj,
                                             const CurvatureReport& curv, int n, int m);

struct CollapseBoundInputs {
  double c_geo = 1.0;
  double c_geo_prime = 1.0;
  double p_star_min = 0.0;
  double lambda_min = 0.0;
  int n = 0;
  int m = 0;
};

/// C m sqrt(log n / (n lambda_min)) + C' m^2 / (n p*_min).
double collapse_bound(const CollapseBoundInputs& in);

struct ResidualReport {
  double max_residual = 0.0;
  double mean_residual = 0.0;
  int window_types = 0;
  /// max_residual / (log n / sqrt(n))
  double scaled_max = 0.0;
  /// Index (into the ensemble) of the type closest to P*.
  std::size_t anchor = 0;
  std::vector<double> residuals;  // per in-window type, ensemble order
};

/// Compares exact log multinomial weights with the local quadratic
/// expansion around P*, relative to the type nearest P*:
///   log w(P) - log w(P0)  vs  q(P) - q(P0),
///   q(P) = -(n/2) u' H u - n lambda*' (A P - alpha),  u = V'(P - P*).
/// The linear term vanishes on E and accounts for types admitted by tau > 0.
ResidualReport quadratic_residual(const ConstrainedModel& model, const TypeEnsemble& ensemble,
                                  const Projection& proj, const CurvatureReport& curv);

struct WindowMass {
  double mass_in = 0.0;
  double mass_out = 0.0;
  /// n * mass_out
  double scaled_out = 0.0;
};

WindowMass window_partition(const TypeEnsemble& ensemble, const Eigen::VectorXd& p_star,
                            const LanfordWindow& window);

struct LanfordFixedPoint {
  double rho_empirical = 0.0;
  double rho_formula = 0.0;
  /// rho_empirical^2 lambda_min / (2 log n)
  double ratio = 0.0;
};

/// Gaussian-kernel average of n ||P - P*||^2 over the ensemble, with kernel
/// exp(-(n/2) u' H u), u = V'(P - P*), against 2 log n / lambda_min.
LanfordFixedPoint lanford_fixed_point(const TypeEnsemble& ensemble, const Projection& proj,
                                      const CurvatureReport& curv);

}  // namespace collapse
