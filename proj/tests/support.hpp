#pragma once

// Shared fixtures and small oracles for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "collapse/model.hpp"

namespace testing {

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> rs, int k) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rs.size()), k);
  Eigen::Index i = 0;
  for (const auto& r : rs) {
    Eigen::Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline collapse::RawModel raw_model(int k, const Eigen::VectorXd& q, const Eigen::MatrixXd& a, const Eigen::VectorXd& alpha) {
  return {k, q, a, alpha};
}

inline collapse::ConstrainedModel make_model(int k, const Eigen::VectorXd& q, const Eigen::MatrixXd& a,
                                             const Eigen::VectorXd& alpha) {
  return collapse::validate_model(raw_model(k, q, a, alpha));
}

/// h(x) = x on {1..k}.
inline Eigen::MatrixXd identity_feature(int k) {
  Eigen::MatrixXd a(1, k);
  for (int x = 0; x < k; ++x) a(0, x) = x + 1;
  return a;
}

inline Eigen::VectorXd uniform(int k) { return Eigen::VectorXd::Constant(k, 1.0 / k); }

/// No constraints.
inline collapse::ConstrainedModel free_model(const Eigen::VectorXd& q) {
  const int k = static_cast<int>(q.size());
  return make_model(k, q, Eigen::MatrixXd(0, k), Eigen::VectorXd(0));
}

/// The running fixture: k=3, Q=(0.2,0.5,0.3), h(x)=x, alpha=2.
inline collapse::ConstrainedModel fixture() {
  return make_model(3, vec({0.2, 0.5, 0.3}), identity_feature(3), vec({2.0}));
}

/// Strictly positive random law on k symbols.
inline Eigen::VectorXd random_law(int k, std::mt19937_64& rng, double floor = 0.05) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(k);
  for (int x = 0; x < k; ++x) p(x) = floor + u(rng);
  return p / p.sum();
}

/// A random model whose alpha is the moment vector of a random interior law,
/// so it is strictly feasible by construction.
inline collapse::ConstrainedModel random_model(int k, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(d, k);
  for (int i = 0; i < d; ++i) {
    for (int x = 0; x < k; ++x) a(i, x) = g(rng);
  }
  const Eigen::VectorXd p = random_law(k, rng);
  return make_model(k, random_law(k, rng), a, a * p);
}

/// Random orthogonal r x r matrix (QR of a Gaussian matrix, sign-fixed).
inline Eigen::MatrixXd random_rotation(int r, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) m(i, j) = g(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, r);
  for (int j = 0; j < r; ++j) {
    if (qr.matrixQR()(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

/// Visits every point of the simplex mesh {p : p = c / steps, c in Z^k_{>=0}}.
inline void for_each_mesh_point(int k, int steps, const std::function<void(const Eigen::VectorXd&)>& f) {
  std::vector<int> c(static_cast<std::size_t>(k), 0);
  Eigen::VectorXd p(k);
  std::function<void(int, int)> rec = [&](int x, int left) {
    if (x == k - 1) {
      c[static_cast<std::size_t>(x)] = left;
      for (int i = 0; i < k; ++i) p(i) = static_cast<double>(c[static_cast<std::size_t>(i)]) / steps;
      f(p);
      return;
    }
    for (int v = left; v >= 0; --v) {
      c[static_cast<std::size_t>(x)] = v;
      rec(x + 1, left - v);
    }
  };
  rec(0, steps);
}

/// KL divergence in long double, independent of the library routine.
inline double kl_reference(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  long double s = 0.0L;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) s += static_cast<long double>(p(i)) * std::log(static_cast<long double>(p(i)) / q(i));
  }
  return static_cast<double>(s);
}

}  // namespace testing
