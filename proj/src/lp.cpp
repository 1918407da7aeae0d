#include "collapse/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace collapse::lp {
namespace {

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols)
      : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  double& at(Eigen::Index i, Eigen::Index j) { return t_(i, j); }
  double rhs(Eigen::Index i) const { return t_(i, cols()); }
  double& cost(Eigen::Index j) { return t_(rows(), j); }
  std::vector<Eigen::Index>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  // Runs simplex iterations over columns [0, allowed). Returns false when
  // the objective is unbounded below.
  bool optimize(Eigen::Index allowed, double tol) {
    const Eigen::Index m = rows();
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (t_(m, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (t_(i, enter) <= tol) continue;
        const double ratio = t_(i, cols()) / t_(i, enter);
        if (ratio < best - tol ||
            (std::abs(ratio - best) <= tol && leave >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

Solution minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                  const Eigen::VectorXd& cost, double tol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Tableau tab(m, n + m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < n; ++j) tab.at(i, j) = sign * a(i, j);
    tab.at(i, n + i) = 1.0;
    tab.at(i, n + m) = sign * b(i);
    tab.basis()[static_cast<std::size_t>(i)] = n + i;
  }

  // Phase 1: minimize the sum of artificials.
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += tab.at(i, j);
    tab.cost(j) = -s;
  }
  double bsum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) bsum += tab.rhs(i);
  tab.cost(n + m) = -bsum;
  tab.optimize(n + m, tol);

  Solution out;
  const double infeasibility = -tab.cost(n + m);
  if (infeasibility > tol * (1.0 + b.lpNorm<Eigen::Infinity>())) {
    out.status = Status::infeasible;
    return out;
  }

  // Pivot remaining artificials out of the basis where possible; rows with no
  // usable original column are redundant and stay at zero.
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n) continue;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.at(i, j)) > tol) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2 on the original columns only.
  for (Eigen::Index j = 0; j <= n + m; ++j) {
    double c = j < n ? cost(j) : 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
      const double cb = bj < n ? cost(bj) : 0.0;
      c -= cb * tab.at(i, j);
    }
    tab.cost(j) = c;
  }
  if (!tab.optimize(n, tol)) {
    out.status = Status::unbounded;
    return out;
  }

  out.status = Status::optimal;
  out.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index bj = tab.basis()[static_cast<std::size_t>(i)];
    if (bj < n) out.x(bj) = std::max(0.0, tab.rhs(i));
  }
  out.value = cost.dot(out.x);
  return out;
}

}  // namespace collapse::lp
