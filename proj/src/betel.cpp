#include "collapse/betel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "collapse/error.hpp"

namespace collapse {

TiltedFamily build_family(const ConstrainedModel& model_template, std::vector<Eigen::VectorXd> theta_grid,
                          std::vector<Eigen::VectorXd> alpha_values, const std::optional<Eigen::VectorXd>& base) {
  if (theta_grid.empty()) throw Error(ErrorCode::invalid_argument, "build_family: empty theta grid");
  if (theta_grid.size() != alpha_values.size()) {
    throw Error(ErrorCode::shape_mismatch, "build_family: one alpha per grid point required");
  }
  TiltedFamily fam{model_template, std::move(theta_grid), std::move(alpha_values), {}, {}};
  fam.projections.reserve(fam.size());
  fam.curvatures.reserve(fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) {
    try {
      const ConstrainedModel mi = model_template.with_alpha(fam.alpha[i]);
      require_interior(mi);
      Projection p = dual_newton(mi, base.value_or(mi.q()));
      fam.curvatures.push_back(curvature_report(mi, p));
      fam.projections.push_back(std::move(p));
    } catch (const Error& e) {
      std::ostringstream os;
      os << "theta[" << i << "] = (" << fam.theta[i].transpose() << "): " << e.what();
      throw Error(e.code(), os.str());
    }
  }
  return fam;
}

TiltedFamily build_family(const ConstrainedModel& model_template, std::vector<Eigen::VectorXd> theta_grid,
                          const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& alpha_map,
                          const std::optional<Eigen::VectorXd>& base) {
  std::vector<Eigen::VectorXd> alphas;
  alphas.reserve(theta_grid.size());
  for (const auto& t : theta_grid) alphas.push_back(alpha_map(t));
  return build_family(model_template, std::move(theta_grid), std::move(alphas), base);
}

GridPosterior betel_posterior(const TiltedFamily& family, const TypeVector& data, std::span<const double> prior,
                              PosteriorVariant variant) {
  const std::size_t g = family.size();
  if (g == 0) throw Error(ErrorCode::invalid_argument, "betel_posterior: empty grid");
  if (data.k() != family.model.k()) throw Error(ErrorCode::shape_mismatch, "betel_posterior: data alphabet mismatch");

  GridPosterior post;
  post.variant = variant;
  post.n_obs = data.n;
  if (prior.empty()) {
    post.prior.assign(g, 1.0 / static_cast<double>(g));
  } else {
    if (prior.size() != g) throw Error(ErrorCode::shape_mismatch, "betel_posterior: prior length differs from grid");
    double s = 0.0;
    for (double w : prior) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::invalid_argument, "betel_posterior: bad prior weight");
      s += w;
    }
    if (!(s > 0.0)) throw Error(ErrorCode::invalid_argument, "betel_posterior: prior has no mass");
    for (double w : prior) post.prior.push_back(w / s);
  }

  Eigen::VectorXd counts(data.k());
  for (int x = 0; x < data.k(); ++x) counts(x) = data.counts[static_cast<std::size_t>(x)];
  const Eigen::VectorXd feature_sum = family.model.features() * counts;

  post.log_posterior.resize(g);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g; ++j) {
    if (post.prior[j] == 0.0) {
      post.log_posterior[j] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Projection& pj = family.projections[j];
    double ll = 0.0;
    for (int x = 0; x < data.k(); ++x) {
      if (counts(x) > 0.0) ll += counts(x) * std::log(pj.p_star(x));
    }
    if (variant == PosteriorVariant::as_printed && feature_sum.size() > 0) ll += pj.lambda_star.dot(feature_sum);
    post.log_posterior[j] = std::log(post.prior[j]) + ll;
    top = std::max(top, post.log_posterior[j]);
  }
  double s = 0.0;
  for (double lp : post.log_posterior) s += std::exp(lp - top);
  const double lse = top + std::log(s);
  post.posterior.resize(g);
  for (std::size_t j = 0; j < g; ++j) {
    post.log_posterior[j] -= lse;
    post.posterior[j] = std::exp(post.log_posterior[j]);
  }
  return post;
}

GridPosterior betel_posterior(const TiltedFamily& family, std::span<const int> sample, std::span<const double> prior,
                              PosteriorVariant variant) {
  return betel_posterior(family, empirical_measure(sample, family.model.k()), prior, variant);
}

ConcentrationProfile concentration_profile(const GridPosterior& posterior, const TiltedFamily& family,
                                           const Eigen::VectorXd& theta0, std::span<const double> radii, double c) {
  if (posterior.posterior.size() != family.size()) {
    throw Error(ErrorCode::shape_mismatch, "concentration_profile: posterior and family differ in size");
  }
  std::vector<double> dist(family.size());
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (family.theta[j].size() != theta0.size()) throw Error(ErrorCode::shape_mismatch, "concentration_profile: theta0 dimension");
    dist[j] = (family.theta[j] - theta0).norm();
  }
  auto tail = [&](double r) {
    double m = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      if (dist[j] > r) m += posterior.posterior[j];
    }
    return m;
  };

  ConcentrationProfile prof;
  prof.radii.assign(radii.begin(), radii.end());
  for (double r : radii) prof.tail_mass.push_back(tail(r));
  prof.anchor = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  prof.lambda_min = family.curvatures[prof.anchor].lambda_min;
  const int n = posterior.n_obs;
  if (n >= 2) {
    prof.reference_radius = c * std::sqrt(std::log(static_cast<double>(n)) / (n * prof.lambda_min));
    prof.reference_tail_mass = tail(prof.reference_radius);
  } else {
    prof.reference_radius = std::numeric_limits<double>::quiet_NaN();
    prof.reference_tail_mass = std::numeric_limits<double>::quiet_NaN();
  }
  return prof;
}

PredictiveLaw betel_predictive(const GridPosterior& posterior, const TiltedFamily& family, int m) {
  if (posterior.posterior.size() != family.size()) {
    throw Error(ErrorCode::shape_mismatch, "betel_predictive: posterior and family differ in size");
  }
  PredictiveLaw out = product_law(family.projections[0].p_star, m);
  for (double& x : out.table) x *= posterior.posterior[0];
  for (std::size_t j = 1; j < family.size(); ++j) {
    if (posterior.posterior[j] == 0.0) continue;
    const PredictiveLaw pj = product_law(family.projections[j].p_star, m);
    for (std::size_t i = 0; i < out.table.size(); ++i) out.table[i] += posterior.posterior[j] * pj.table[i];
  }
  out.kind = LawKind::gaussian_mixture;
  return out;
}

PseudoTrue pseudo_true(const TiltedFamily& family, const Eigen::VectorXd& p0, Divergence direction) {
  if (family.size() == 0) throw Error(ErrorCode::invalid_argument, "pseudo_true: empty family");
  if (p0.size() != family.model.k()) throw Error(ErrorCode::shape_mismatch, "pseudo_true: p0 alphabet mismatch");
  if ((p0.array() <= 0.0).any()) throw Error(ErrorCode::invalid_argument, "pseudo_true: p0 must be strictly positive");
  std::vector<double> div(family.size());
  for (std::size_t j = 0; j < family.size(); ++j) {
    const Eigen::VectorXd& pj = family.projections[j].p_star;
    div[j] = direction == Divergence::forward ? kl_divergence(p0, pj) : kl_divergence(pj, p0);
  }
  PseudoTrue out;
  out.index = static_cast<std::size_t>(std::min_element(div.begin(), div.end()) - div.begin());
  out.divergence = div[out.index];
  const double tol = 1e-12 * std::max(1.0, out.divergence);
  for (std::size_t j = 0; j < div.size(); ++j) {
    if (j != out.index && std::abs(div[j] - out.divergence) <= tol) out.tie = true;
  }
  return out;
}

std::vector<int> simulate_sample(const Eigen::VectorXd& p, int n, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "simulate_sample: negative n");
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index x = 0; x < p.size(); ++x) {
    acc += p(x);
    cdf[static_cast<std::size_t>(x)] = acc;
  }
  std::mt19937_64 rng(seed);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // 53-bit uniform in [0, acc); independent of the standard library's
    // distribution implementations.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(static_cast<int>(it - cdf.begin()) + 1);
  }
  return out;
}

}  // namespace collapse
