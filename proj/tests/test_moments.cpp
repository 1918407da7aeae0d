#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "collapse/error.hpp"
#include "collapse/moments.hpp"
#include "collapse/projection.hpp"
#include "support.hpp"

using namespace collapse;
using testing::identity_feature;
using testing::make_model;
using testing::vec;

namespace {

Eigen::MatrixXd scalar(double x) { return Eigen::MatrixXd::Constant(1, 1, x); }

Eigen::MatrixXd covariance_form(const Eigen::VectorXd& p, const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd cov = Eigen::MatrixXd(p.asDiagonal()) - p * p.transpose();
  return a * cov * a.transpose();
}

Eigen::MatrixXd random_spd(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = g(rng);
  }
  return m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

}  // namespace

TEST_CASE("gmm_weight: uniform k = 3, h = x") {
  const GmmWeight w = gmm_weight(testing::uniform(3), identity_feature(3));
  CHECK(w.pushforward(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(w.w_opt(0, 0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(w.tangent_kind == TangentKind::simplex_tangent);
}

TEST_CASE("gmm_weight: covariance identity on random fixtures") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 3 + trial % 5;
    const int d = 1 + trial % (k - 2);
    const ConstrainedModel m = testing::random_model(k, d, rng);
    const Eigen::VectorXd ps = project(m).p_star;
    const GmmWeight w = gmm_weight(ps, m.features());
    const Eigen::MatrixXd expect = covariance_form(ps, m.features());
    CHECK((w.pushforward - expect).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((w.w_opt * expect - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("gmm_weight: constraint tangent gives a zero pushforward") {
  const ConstrainedModel m = testing::fixture();
  const Eigen::VectorXd ps = project(m).p_star;
  try {
    gmm_weight(ps, m.features(), TangentKind::constraint_tangent);
    FAIL("expected SingularMatrix");
  } catch (const SingularMatrix& e) {
    CHECK(e.code() == ErrorCode::singular_matrix);
    CHECK(e.direction().norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("gmm_weight: collinear moments are singular") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 2, 4, 6;
  try {
    gmm_weight(testing::uniform(3), a);
    FAIL("expected SingularMatrix");
  } catch (const SingularMatrix& e) {
    // The null direction is (2, -1)/sqrt5 up to sign.
    CHECK(std::abs(std::abs(e.direction()(0)) - 2.0 / std::sqrt(5.0)) <= 1e-8);
  }
}

TEST_CASE("gmm_objective") {
  const Eigen::MatrixXd h = identity_feature(2);
  CHECK(gmm_objective(TypeVector{{4, 6}, 10}, h, vec({1.5}), scalar(1.0)) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(gmm_objective(TypeVector{{5, 5}, 10}, h, vec({1.5}), scalar(3.0)) == 0.0);
  CHECK(gmm_objective(TypeVector{{0, 0}, 0}, h, vec({1.5}), scalar(3.0)) == 0.0);
  CHECK_THROWS_AS(gmm_objective(TypeVector{{4, 6}, 10}, h, vec({1.5, 1.0}), scalar(1.0)), Error);
}

TEST_CASE("optimal GMM objective is invariant under recombining moment rows") {
  std::mt19937_64 rng(67);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 5, d = 1 + trial % 3;
    const ConstrainedModel m = testing::random_model(k, d, rng);
    const Eigen::VectorXd ps = project(m).p_star;
    Eigen::MatrixXd mix(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) mix(i, j) = g(rng);
    }
    mix += 2.0 * Eigen::MatrixXd::Identity(d, d);
    const GmmWeight w = gmm_weight(ps, m.features());
    const GmmWeight wm = gmm_weight(ps, mix * m.features());
    // W transforms as M^{-T} W M^{-1}.
    const Eigen::MatrixXd minv = mix.inverse();
    CHECK((wm.w_opt - minv.transpose() * w.w_opt * minv).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + w.w_opt.norm()));
    const std::vector<int> sample = [&] {
      std::vector<int> s;
      std::uniform_int_distribution<int> u(1, k);
      for (int i = 0; i < 40; ++i) s.push_back(u(rng));
      return s;
    }();
    const TypeVector data = empirical_measure(sample, k);
    const double j0 = gmm_objective(data, m.features(), m.alpha(), w.w_opt);
    const double j1 = gmm_objective(data, mix * m.features(), mix * m.alpha(), wm.w_opt);
    CHECK(std::abs(j0 - j1) <= 1e-9 * std::max(1.0, j0));
  }
}

TEST_CASE("gee_curvature: scalar fixtures") {
  const GeeCurvature one = gee_curvature({{scalar(1), scalar(1), scalar(1)}});
  CHECK(one.j(0, 0) == 1.0);
  CHECK(one.k(0, 0) == 1.0);
  CHECK(one.sandwich(0, 0) == 1.0);

  const GeeCurvature two = gee_curvature({{scalar(1), scalar(1), scalar(2)}, {scalar(2), scalar(1), scalar(1)}});
  CHECK(two.j(0, 0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(two.k(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(two.sandwich(0, 0) == doctest::Approx(0.48).epsilon(1e-15));
  CHECK(two.lambda_min_j == doctest::Approx(2.5));
  CHECK(two.rate_proxy(100) == doctest::Approx(std::sqrt(std::log(100.0) / 250.0)));
}

TEST_CASE("gee_curvature: efficient weights collapse the sandwich to J^{-1}") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 2 + trial % 3, q = p + 1;
    std::vector<GeeCluster> clusters;
    for (int c = 0; c < 6; ++c) {
      Eigen::MatrixXd d(q, p);
      for (int i = 0; i < q; ++i) {
        for (int j = 0; j < p; ++j) d(i, j) = g(rng);
      }
      const Eigen::MatrixXd sigma = random_spd(q, rng);
      clusters.push_back({d, sigma.inverse(), sigma});
    }
    const GeeCurvature gc = gee_curvature(clusters);
    CHECK((gc.k - gc.j).cwiseAbs().maxCoeff() <= 1e-10 * gc.j.norm());
    CHECK((gc.sandwich - gc.j.inverse()).cwiseAbs().maxCoeff() <= 1e-9 * gc.j.inverse().norm());
  }
}

TEST_CASE("gee_curvature: errors") {
  CHECK_THROWS_AS(gee_curvature({}), Error);
  CHECK_THROWS_AS(gee_curvature({{scalar(0), scalar(1), scalar(1)}}), SingularMatrix);
  CHECK_THROWS_AS(gee_curvature({{scalar(1), Eigen::MatrixXd::Identity(2, 2), scalar(1)}}), Error);
}

TEST_CASE("curvature_comparability") {
  const Eigen::MatrixXd h = (Eigen::MatrixXd(2, 2) << 3, 1, 1, 2).finished();
  const Comparability eq = curvature_comparability(h, h, 1.0, 1.0);
  CHECK(eq.holds());
  CHECK(std::abs(eq.lower_margin) <= 1e-12);
  CHECK(std::abs(eq.upper_margin) <= 1e-12);

  CHECK(curvature_comparability(2.0 * h, h, 1.0, 3.0).holds());
  const Comparability bad = curvature_comparability(2.0 * h, h, 3.0, 3.0);
  CHECK_FALSE(bad.lower_holds);
  CHECK(bad.lower_margin < 0.0);
  CHECK(bad.upper_holds);
}
