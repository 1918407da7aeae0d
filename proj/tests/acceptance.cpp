// Acceptance suite: one line per criterion, "PASS" or "FAIL", with the
// measured quantities. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "collapse/betel.hpp"
#include "collapse/curvature.hpp"
#include "collapse/error.hpp"
#include "collapse/experiment.hpp"
#include "collapse/moments.hpp"
#include "collapse/oracle.hpp"
#include "collapse/projection.hpp"
#include "support.hpp"

using namespace collapse;
using testing::identity_feature;
using testing::make_model;
using testing::vec;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Fitted {
  ConstrainedModel model;
  Projection proj;
  CurvatureReport curv;
};

Fitted fit(const ConstrainedModel& m) {
  Projection p = project(m);
  CurvatureReport c = curvature_report(m, p);
  return {m, std::move(p), std::move(c)};
}

// The fixtures used by the tail and fixed-point criteria.
std::vector<Fitted> fixtures() {
  return {fit(testing::fixture()), fit(make_model(4, vec({0.1, 0.2, 0.3, 0.4}), identity_feature(4), vec({2.6})))};
}

void criterion1(Verdict& v) {
  double worst_p = 0.0, worst_kkt = 0.0;
  const int reps = 2000;
  double worst_time = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double a = 1.0 + 0.1 * i;
    const ConstrainedModel m = make_model(2, testing::uniform(2), identity_feature(2), vec({a}));
    Projection p;
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) p = dual_newton(m, m.q());
    worst_time = std::max(worst_time, seconds_since(t0) / reps);
    worst_p = std::max({worst_p, std::abs(p.p_star(0) - (2.0 - a)), std::abs(p.p_star(1) - (a - 1.0))});
    worst_kkt = std::max(worst_kkt, p.kkt_residual);
  }
  v.detail << "max |P*-closed form| = " << worst_p << ", max KKT = " << worst_kkt
           << ", slowest solve = " << worst_time * 1e6 << " us";
  v.require(worst_p <= 1e-9, "closed form to 1e-9");
  v.require(worst_kkt <= 1e-10, "KKT <= 1e-10");
  v.require(worst_time < 1e-3, "< 1 ms per solve");
}

void criterion2(Verdict& v) {
  const Fitted f = fit(testing::free_model(vec({0.5, 0.25, 0.25})));
  const double e_hi = std::abs(f.curv.spectrum(0) - 4.0), e_lo = std::abs(f.curv.spectrum(1) - 8.0 / 3.0);
  v.detail << "spectrum error = " << std::max(e_hi, e_lo);
  v.require(e_hi <= 1e-9 && e_lo <= 1e-9, "spectrum {8/3, 4}");

  std::mt19937_64 rng(2024);
  int contained = 0;
  double basis_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int k = 3 + t % 4;
    const Fitted r = fit(testing::random_model(k, t % (k - 1), rng));
    const bool in = r.curv.spectrum.maxCoeff() <= r.curv.compression_bounds.second * (1 + 1e-12) &&
                    r.curv.spectrum.minCoeff() >= r.curv.compression_bounds.first * (1 - 1e-12);
    contained += in ? 1 : 0;
    if (t < 10) {
      // Ten random orthonormal bases of T*, one per fixture.
      const Eigen::MatrixXd rot = r.curv.v * testing::random_rotation(r.curv.r(), rng);
      basis_err = std::max(basis_err, std::abs(min_eigenvalue(projected_hessian(r.proj.p_star, rot)).lambda_min -
                                               r.curv.lambda_min));
    }
  }
  // Ten random bases of a single fixture as well.
  const Fitted fx = fit(testing::random_model(5, 1, rng));
  for (int i = 0; i < 10; ++i) {
    const Eigen::MatrixXd rot = fx.curv.v * testing::random_rotation(fx.curv.r(), rng);
    basis_err = std::max(basis_err,
                         std::abs(min_eigenvalue(projected_hessian(fx.proj.p_star, rot)).lambda_min - fx.curv.lambda_min));
  }
  v.detail << ", containment " << contained << "/50, basis invariance error = " << basis_err;
  v.require(contained == 50, "compression containment");
  v.require(basis_err <= 1e-9, "basis invariance");
}

void criterion3(Verdict& v) {
  std::mt19937_64 rng(3);
  double worst = 0.0;
  int cases = 0;
  for (int k = 2; k <= 4; ++k) {
    const Eigen::VectorXd q = testing::random_law(k, rng);
    const ConstrainedModel m = testing::free_model(q);
    for (int n = 5; n <= 60; ++n) {
      const PredictiveLaw l = predictive_exact(feasible_types(m, n), 1);
      for (int x = 0; x < k; ++x) worst = std::max(worst, std::abs(l.table[static_cast<std::size_t>(x)] - q(x)));
      ++cases;
    }
  }
  v.detail << cases << " (n,k) cases, max |mu_n,1 - Q| = " << worst;
  v.require(worst <= 1e-12, "equals Q to 1e-12");
}

void criterion4(Verdict& v) {
  long checked = 0, violations = 0;
  double worst_ratio = 0.0;
  for (int k = 2; k <= 3; ++k) {
    for (int n = k; n <= 30; ++n) {
      for (const TypeVector& t : enumerate_types(n, k)) {
        if (*std::min_element(t.counts.begin(), t.counts.end()) == 0) continue;
        for (int m = 1; m <= std::min(3, n); ++m) {
          const HypergeometricCheck h = hypergeometric_bound_check(t, m);
          ++checked;
          if (!h.ok) ++violations;
          if (h.bound > 0) worst_ratio = std::max(worst_ratio, h.tv / h.bound);
        }
      }
    }
  }
  const double tv55 = hypergeometric_bound_check(TypeVector{{5, 5}, 10}, 2).tv;
  v.detail << checked << " (type, m) cases, " << violations << " violations, max tv/bound = " << worst_ratio
           << ", tv(5,5;m=2) - 1/18 = " << tv55 - 1.0 / 18.0;
  v.require(violations == 0, "zero violations");
  v.require(std::abs(tv55 - 1.0 / 18.0) <= 1e-15, "(5,5) case equals 1/18");
}

void criterion5(Verdict& v) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.model = testing::fixture().raw();
  for (int n = 20; n <= 100; n += 10) cfg.n_grid.push_back(n);
  cfg.m_grid = {1};
  const ExperimentReport rep = run_experiment(cfg);
  const double elapsed = seconds_since(t0);
  const RateFit& rf = rep.rate_fits.at(0).second;
  bool bound_ok = true;
  for (const auto& c : rep.cells) bound_ok = bound_ok && c.tv_exact <= c.bound * (1.0 + 1e-12);
  v.detail << "slope = " << rf.slope << " (r^2 = " << rf.r_squared << "), C = C' = " << rep.constants[0].c_geo
           << " frozen at n=20, bound holds: " << (bound_ok ? "yes" : "no") << ", n*TV = " << 20 * rep.cells.front().tv_exact
           << " .. " << 100 * rep.cells.back().tv_exact << ", " << elapsed << " s";
  v.require(std::abs(rf.slope - 1.0) <= 0.35, "slope within 1 +- 0.35");
  v.require(bound_ok, "TV <= bound with frozen constants");
  v.require(elapsed < 60.0, "runtime < 60 s");
}

void criterion6(Verdict& v) {
  const Fitted f = fit(testing::fixture());
  for (int m : {1, 2}) {
    std::vector<double> tvs;
    for (int n : {20, 40, 80}) {
      const MixtureApproximation mix = gaussian_mixture_approx(f.model, f.proj, f.curv, n, m);
      tvs.push_back(tv_distance(mix.law, predictive_exact(feasible_types(f.model, n), m)));
    }
    v.detail << (m == 1 ? "" : "; ") << "m=" << m << ": " << tvs[0] << ", " << tvs[1] << ", " << tvs[2];
    v.require(tvs[1] < tvs[0] && tvs[2] < tvs[1], "strictly decreasing (m=" + std::to_string(m) + ")");
    v.require(tvs[2] < 0.05, "final < 0.05 (m=" + std::to_string(m) + ")");
  }
}

void criterion7(Verdict& v) {
  double worst = 0.0;
  for (const Fitted& f : fixtures()) {
    for (int n = 20; n <= 100; n += 10) {
      const WindowMass w = window_partition(feasible_types(f.model, n), f.proj.p_star, lanford_radius(f.curv.lambda_min, n));
      worst = std::max(worst, w.scaled_out);
    }
  }
  v.detail << "max n*mass_out = " << worst;
  v.require(worst <= 10.0, "n * mass_out <= 10");
}

void criterion8(Verdict& v) {
  double lo = INFINITY, hi = 0.0;
  for (const Fitted& f : fixtures()) {
    for (int n = 40; n <= 100; n += 20) {
      const double r = lanford_fixed_point(feasible_types(f.model, n), f.proj, f.curv).ratio;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  v.detail << "ratio range [" << lo << ", " << hi << "]";
  v.require(lo > 0.0 && hi <= 3.0, "ratio in (0, 3]");
}

void criterion9(Verdict& v) {
  const ConstrainedModel tmpl = make_model(2, testing::uniform(2), identity_feature(2), vec({1.5}));
  const auto id = [](const Eigen::VectorXd& t) { return t; };
  const TiltedFamily f = build_family(tmpl, {vec({1.4}), vec({1.6})}, id);
  const GridPosterior post = betel_posterior(f, TypeVector{{4, 6}, 10}, {});
  const double odds_err = std::abs((post.log_posterior[0] - post.log_posterior[1]) - std::log(4.0 / 9.0));
  v.detail << "log-odds error = " << odds_err;
  v.require(odds_err <= 1e-12, "odds 4:9");

  const ConstrainedModel fx = testing::fixture();
  std::vector<Eigen::VectorXd> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(vec({1.5 + 0.05 * i}));
  const TiltedFamily fam = build_family(fx, grid, id);
  const TiltedFamily scaled = build_family(fx, grid, id, Eigen::VectorXd(3.7 * fx.q()));
  const std::vector<int> a{1, 2, 3, 3, 2, 2, 1, 3, 2, 2, 3, 1};
  std::vector<int> b = a;
  std::reverse(b.begin(), b.end());
  std::rotate(b.begin(), b.begin() + 5, b.end());
  const GridPosterior pa = betel_posterior(fam, std::span<const int>(a), {});
  const GridPosterior pb = betel_posterior(fam, std::span<const int>(b), {});
  const GridPosterior ps = betel_posterior(scaled, std::span<const int>(a), {});
  double suff = 0.0, resc = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    suff = std::max(suff, std::abs(pa.posterior[j] - pb.posterior[j]));
    resc = std::max(resc, std::abs(pa.posterior[j] - ps.posterior[j]));
  }
  v.detail << ", sufficiency diff = " << suff << ", Q-rescaling diff = " << resc;
  v.require(suff == 0.0, "sufficiency exact");
  v.require(resc <= 1e-12, "Q-rescaling invariance");
}

void criterion10(Verdict& v) {
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int k = 3 + t % 5;
    const int d = 1 + t % (k - 2);
    const ConstrainedModel m = testing::random_model(k, d, rng);
    const Eigen::VectorXd ps = project(m).p_star;
    const Eigen::MatrixXd cov = Eigen::MatrixXd(ps.asDiagonal()) - ps * ps.transpose();
    const GmmWeight w = gmm_weight(ps, m.features());
    worst = std::max(worst, (w.pushforward - m.features() * cov * m.features().transpose()).cwiseAbs().maxCoeff());
  }
  const double w3 = gmm_weight(testing::uniform(3), identity_feature(3)).w_opt(0, 0);
  v.detail << "max pushforward error = " << worst << ", W_opt(uniform k=3) = " << w3;
  v.require(worst <= 1e-10, "covariance identity to 1e-10");
  v.require(std::abs(w3 - 1.5) <= 1e-12, "W_opt = 1.5");
}

void criterion11(Verdict& v) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int p = 1 + t % 4, q = p + 2;
    std::vector<GeeCluster> cl;
    for (int c = 0; c < 5; ++c) {
      Eigen::MatrixXd d(q, p), s(q, q);
      for (int i = 0; i < q; ++i) {
        for (int j = 0; j < p; ++j) d(i, j) = g(rng);
        for (int j = 0; j < q; ++j) s(i, j) = g(rng);
      }
      const Eigen::MatrixXd sigma = s * s.transpose() + Eigen::MatrixXd::Identity(q, q);
      cl.push_back({d, sigma.inverse(), sigma});
    }
    const GeeCurvature gc = gee_curvature(cl);
    const Eigen::MatrixXd jinv = gc.j.inverse();
    worst = std::max(worst, (gc.sandwich - jinv).cwiseAbs().maxCoeff() / jinv.cwiseAbs().maxCoeff());
  }
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0), two = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const double s = gee_curvature({{one, one, two}, {two, one, one}}).sandwich(0, 0);
  v.detail << "max relative |sandwich - J^-1| = " << worst << ", scalar fixture = " << s;
  v.require(worst <= 1e-10, "sandwich = J^-1 when W = Sigma^-1");
  v.require(std::abs(s - 0.48) <= 1e-15, "scalar fixture 0.48");
}

void criterion12(Verdict& v) {
  double worst = 0.0;
  for (double lam : {0.1, 1.0, 8.0 / 3.0, 50.0}) {
    for (double beta : {0.5, 1.0, 2.0}) {
      const Tempering t = temper(lam, beta);
      for (int n : {20, 100, 1000}) {
        const double ratio = collapse_rate_term(1, n, t.effective_lambda_min) / collapse_rate_term(1, n, lam);
        worst = std::max(worst, std::abs(ratio / std::sqrt(t.temperature) - 1.0));
      }
    }
  }
  const double t0 = temper(0.0).temperature, t1 = temper(1.0, 1.0, 1.0).temperature;
  v.detail << "max |rate ratio / sqrt(T) - 1| = " << worst << ", T(0) = " << t0 << ", T(lambda0) - 1 - ln2 = "
           << t1 - 1.0 - std::log(2.0);
  v.require(worst <= 1e-14, "rate term scales by sqrt(T)");
  v.require(t0 == 1.0, "T(0) = 1");
  v.require(std::abs(t1 - 1.0 - std::log(2.0)) <= 1e-15, "T(lambda0) = 1 + ln 2");
}

void criterion13(Verdict& v) {
  ExperimentConfig cfg;
  cfg.model = testing::fixture().raw();
  cfg.n_grid = {20, 30, 40, 50, 60};
  cfg.m_grid = {1, 2, 3};
  const auto base = std::filesystem::temp_directory_path() / "collapse_lab_acceptance13";
  std::vector<std::string> files;
  for (int threads : {1, 2, 3, 8, 1}) {
    const auto dir = base / ("t" + std::to_string(files.size()));
    write_outputs(run_experiment(cfg, threads), dir);
    std::ifstream in(dir / "collapse.csv", std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    files.push_back(s.str());
  }
  std::filesystem::remove_all(base);
  bool same = true;
  for (const auto& f : files) same = same && f == files.front();
  v.detail << files.size() << " runs with 1,2,3,8,1 threads, " << files.front().size() << " bytes each, identical: "
           << (same ? "yes" : "no");
  v.require(same, "byte-identical CSVs");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"I-projection exactness", criterion1},   {"curvature correctness", criterion2},
      {"oracle sanity", criterion3},            {"hypergeometric bound", criterion4},
      {"collapse rate", criterion5},            {"Gaussian mixture", criterion6},
      {"tail control", criterion7},             {"Lanford fixed point", criterion8},
      {"BETEL", criterion9},                    {"GMM identity", criterion10},
      {"GEE sandwich", criterion11},            {"tempering", criterion12},
      {"determinism", criterion13},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failed += v.pass ? 0 : 1;
    std::printf("criterion %2zu %-24s %s  %s\n", i + 1, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                v.detail.str().c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
