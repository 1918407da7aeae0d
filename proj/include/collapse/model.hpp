#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace collapse {

/// Unvalidated model as it arrives from a caller or a JSON document.
/// `features` is d x k: column x holds h(x).
struct RawModel {
  int k = 0;
  Eigen::VectorXd q;
  Eigen::MatrixXd features;
  Eigen::VectorXd alpha;
};

/// Finite alphabet {1..k}, strictly positive reference law Q and affine
/// moment constraints A p = alpha. Only `validate_model` constructs one, so
/// every instance satisfies:
///   - Q > 0 entrywise and sums to one within 1e-12;
///   - the rows of [1'; A] are linearly independent (dependent rows were
///     dropped and are listed in `dropped_rows()`);
///   - feature_bound() is max |A(i,x)| over the retained rows.
class ConstrainedModel {
 public:
  int k() const { return static_cast<int>(q_.size()); }
  int d() const { return static_cast<int>(features_.rows()); }
  /// Dimension of the feasible manifold, k - 1 - d.
  int tangent_dim() const { return k() - 1 - d(); }
  bool zero_dimensional() const { return tangent_dim() == 0; }

  const Eigen::VectorXd& q() const { return q_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double feature_bound() const { return bound_; }

  const std::vector<int>& dropped_rows() const { return dropped_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  RawModel raw() const { return {k(), q_, features_, alpha_}; }

  /// Same alphabet and features with new target moments.
  ConstrainedModel with_alpha(const Eigen::VectorXd& alpha) const;
  /// Same constraints with a new reference law (validated again).
  ConstrainedModel with_reference(const Eigen::VectorXd& q) const;

  friend ConstrainedModel validate_model(const RawModel& raw);
  friend bool operator==(const ConstrainedModel&, const ConstrainedModel&);

 private:
  ConstrainedModel() = default;

  Eigen::VectorXd q_;
  Eigen::MatrixXd features_;
  Eigen::VectorXd alpha_;
  double bound_ = 0.0;
  std::vector<int> dropped_;
  std::vector<std::string> warnings_;
};

bool operator==(const ConstrainedModel& a, const ConstrainedModel& b);

/// Checks and normalizes a raw model. Q is rescaled when its sum is off by
/// more than 1e-12 but within 1e-9 of one; anything further is an error.
/// Constraint rows that are linear combinations of the all-ones row and of
/// earlier retained rows are dropped with a warning; if the dropped row's
/// target disagrees with the implied combination the model is rejected.
ConstrainedModel validate_model(const RawModel& raw);

/// Empirical type of a sample: counts over {1..k} and the sample size.
struct TypeVector {
  std::vector<int> counts;
  int n = 0;

  int k() const { return static_cast<int>(counts.size()); }
  /// counts / n (all zeros when n == 0).
  Eigen::VectorXd probabilities() const;
  friend bool operator==(const TypeVector&, const TypeVector&) = default;
};

/// Tallies a sample of 1-based symbols.
TypeVector empirical_measure(std::span<const int> sample, int k);

struct FeasibilityReport {
  bool alpha_in_hull = false;
  /// A strictly positive feasible law exists (alpha in the relative interior).
  bool interior = false;
  /// max over feasible p of min_x p(x); zero on the boundary, -1 when
  /// infeasible.
  double interior_margin = -1.0;
  int rank_a = 0;
  std::vector<int> reduced_rows;
  int tangent_dim = 0;
};

/// Decides alpha in conv{h(x)} by LP feasibility of {p >= 0, 1'p = 1, Ap = alpha}
/// and interiority by maximizing t subject to p >= t.
FeasibilityReport feasibility_check(const ConstrainedModel& model);

/// Throws InfeasibleAlpha or BoundaryAlpha unless alpha is strictly interior.
void require_interior(const ConstrainedModel& model);

}  // namespace collapse
