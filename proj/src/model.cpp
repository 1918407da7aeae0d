#include "collapse/model.hpp"

#include <cmath>
#include <sstream>

#include "collapse/error.hpp"
#include "collapse/lp.hpp"

namespace collapse {
namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kNormalizableTolerance = 1e-9;
constexpr double kRankTolerance = 1e-10;
constexpr double kInteriorTolerance = 1e-9;

}  // namespace

ConstrainedModel validate_model(const RawModel& raw) {
  if (raw.k < 1) throw Error(ErrorCode::invalid_model, "empty alphabet");
  if (raw.k < 2) throw Error(ErrorCode::invalid_model, "alphabet needs at least two symbols");
  if (raw.q.size() != raw.k) {
    throw Error(ErrorCode::invalid_model, "Q has length " + std::to_string(raw.q.size()) +
                                              ", expected k = " + std::to_string(raw.k));
  }
  if (raw.features.rows() > 0 && raw.features.cols() != raw.k) {
    throw Error(ErrorCode::invalid_model, "feature matrix must have k columns");
  }
  if (raw.features.rows() != raw.alpha.size()) {
    throw Error(ErrorCode::invalid_model, "alpha length must equal the number of feature rows");
  }
  if (!raw.features.allFinite() || !raw.alpha.allFinite() || !raw.q.allFinite()) {
    throw Error(ErrorCode::invalid_model, "non-finite entry in model");
  }
  for (int x = 0; x < raw.k; ++x) {
    if (!(raw.q(x) > 0.0)) {
      throw Error(ErrorCode::invalid_model, "Q(" + std::to_string(x + 1) + ") is not positive");
    }
  }
  const double total = raw.q.sum();
  if (std::abs(total - 1.0) > kNormalizableTolerance) {
    std::ostringstream os;
    os << "Q sums to " << total << ", not 1";
    throw Error(ErrorCode::invalid_model, os.str());
  }

  ConstrainedModel model;
  model.q_ = std::abs(total - 1.0) > kSumTolerance ? Eigen::VectorXd(raw.q / total) : raw.q;

  // Greedy row selection against span{1, retained rows}.
  const Eigen::Index k = raw.k;
  std::vector<Eigen::VectorXd> ortho{Eigen::VectorXd::Ones(k) / std::sqrt(static_cast<double>(k))};
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < raw.features.rows(); ++i) {
    Eigen::VectorXd row = raw.features.row(i).transpose();
    Eigen::VectorXd resid = row;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& e : ortho) resid -= e.dot(resid) * e;
    }
    const double scale = std::max(1.0, row.norm());
    if (resid.norm() > kRankTolerance * scale) {
      ortho.push_back(resid / resid.norm());
      kept.push_back(i);
      continue;
    }
    Eigen::MatrixXd basis(k, static_cast<Eigen::Index>(kept.size()) + 1);
    basis.col(0).setOnes();
    Eigen::VectorXd targets(static_cast<Eigen::Index>(kept.size()) + 1);
    targets(0) = 1.0;
    for (std::size_t j = 0; j < kept.size(); ++j) {
      basis.col(static_cast<Eigen::Index>(j) + 1) = raw.features.row(kept[j]).transpose();
      targets(static_cast<Eigen::Index>(j) + 1) = raw.alpha(kept[j]);
    }
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(row);
    const double implied = coef.dot(targets);
    if (std::abs(implied - raw.alpha(i)) > kNormalizableTolerance * std::max(1.0, std::abs(raw.alpha(i)))) {
      std::ostringstream os;
      os << "constraint row " << i << " is a combination of other rows but its target "
         << raw.alpha(i) << " differs from the implied " << implied;
      throw Error(ErrorCode::inconsistent_constraints, os.str());
    }
    model.dropped_.push_back(static_cast<int>(i));
    model.warnings_.push_back("dropped linearly dependent constraint row " + std::to_string(i));
  }

  model.features_.resize(static_cast<Eigen::Index>(kept.size()), k);
  model.alpha_.resize(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    model.features_.row(static_cast<Eigen::Index>(j)) = raw.features.row(kept[j]);
    model.alpha_(static_cast<Eigen::Index>(j)) = raw.alpha(kept[j]);
  }
  model.bound_ = model.features_.size() == 0 ? 0.0 : model.features_.cwiseAbs().maxCoeff();
  if (model.zero_dimensional()) {
    model.warnings_.push_back("constraints pin a single law: feasible set is zero-dimensional");
  }
  return model;
}

ConstrainedModel ConstrainedModel::with_alpha(const Eigen::VectorXd& alpha) const {
  RawModel r = raw();
  r.alpha = alpha;
  return validate_model(r);
}

ConstrainedModel ConstrainedModel::with_reference(const Eigen::VectorXd& q) const {
  RawModel r = raw();
  r.q = q;
  return validate_model(r);
}

bool operator==(const ConstrainedModel& a, const ConstrainedModel& b) {
  return a.q_ == b.q_ && a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() && a.features_ == b.features_ &&
         a.alpha_ == b.alpha_ && a.bound_ == b.bound_;
}

Eigen::VectorXd TypeVector::probabilities() const {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(k());
  if (n == 0) return p;
  for (int x = 0; x < k(); ++x) p(x) = static_cast<double>(counts[static_cast<std::size_t>(x)]) / n;
  return p;
}

TypeVector empirical_measure(std::span<const int> sample, int k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "alphabet size must be positive");
  TypeVector t{std::vector<int>(static_cast<std::size_t>(k), 0), 0};
  for (int s : sample) {
    if (s < 1 || s > k) {
      throw Error(ErrorCode::out_of_range_symbol,
                  "symbol " + std::to_string(s) + " outside 1.." + std::to_string(k));
    }
    ++t.counts[static_cast<std::size_t>(s - 1)];
    ++t.n;
  }
  return t;
}

FeasibilityReport feasibility_check(const ConstrainedModel& model) {
  const int k = model.k();
  const int d = model.d();
  FeasibilityReport rep;
  rep.rank_a = d;
  rep.reduced_rows = model.dropped_rows();
  rep.tangent_dim = model.tangent_dim();

  Eigen::MatrixXd eq(d + 1, k);
  eq.row(0).setOnes();
  eq.bottomRows(d) = model.features();
  Eigen::VectorXd rhs(d + 1);
  rhs(0) = 1.0;
  rhs.tail(d) = model.alpha();

  const auto hull = lp::minimize(eq, rhs, Eigen::VectorXd::Zero(k));
  rep.alpha_in_hull = hull.status == lp::Status::optimal;
  if (!rep.alpha_in_hull) return rep;

  // p = s + t 1 with s, t >= 0; maximize t.
  Eigen::MatrixXd eq2(d + 1, k + 1);
  eq2.leftCols(k) = eq;
  eq2.col(k) = eq.rowwise().sum();
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(k + 1);
  cost(k) = -1.0;
  const auto inner = lp::minimize(eq2, rhs, cost);
  rep.interior_margin = inner.status == lp::Status::optimal ? inner.x(k) : 0.0;
  rep.interior = rep.interior_margin > kInteriorTolerance;
  return rep;
}

void require_interior(const ConstrainedModel& model) {
  const auto rep = feasibility_check(model);
  if (!rep.alpha_in_hull) {
    throw Error(ErrorCode::infeasible_alpha, "alpha lies outside the convex hull of the features");
  }
  if (!rep.interior) {
    throw Error(ErrorCode::boundary_alpha,
                "alpha lies on the boundary of the feature hull; the projection would have zero entries");
  }
}

}  // namespace collapse
