#include "collapse/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "collapse/error.hpp"

namespace collapse {
namespace {

std::size_t table_size(int k, int m) {
  if (k < 1 || m < 0) throw Error(ErrorCode::invalid_argument, "predictive table needs k >= 1 and m >= 0");
  std::uint64_t cells = 1;
  for (int i = 0; i < m; ++i) {
    cells *= static_cast<std::uint64_t>(k);
    if (cells > kMaxTableCells) {
      std::ostringstream os;
      os << "k^m = " << k << "^" << m << " exceeds the dense table guard of " << kMaxTableCells;
      throw Error(ErrorCode::enumeration_guard, os.str());
    }
  }
  return static_cast<std::size_t>(cells);
}

// Adds scale * Pr(x_{1:m}) for draws without replacement from `counts`.
void accumulate_urn(const std::vector<int>& counts, int n, int m, double scale, std::vector<double>& table) {
  const int k = static_cast<int>(counts.size());
  std::vector<int> left = counts;
  auto rec = [&](auto&& self, int depth, double prob, std::size_t idx) -> void {
    if (depth == m) {
      table[idx] += scale * prob;
      return;
    }
    const double remaining = static_cast<double>(n - depth);
    for (int x = 0; x < k; ++x) {
      const int c = left[static_cast<std::size_t>(x)];
      if (c == 0) continue;
      left[static_cast<std::size_t>(x)] = c - 1;
      self(self, depth + 1, prob * (c / remaining), idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(x));
      left[static_cast<std::size_t>(x)] = c;
    }
  };
  rec(rec, 0, 1.0, 0);
}

// Writes scale * P^{(x) m} into table (added).
void accumulate_product(const Eigen::VectorXd& p, int m, double scale, std::vector<double>& table) {
  const int k = static_cast<int>(p.size());
  auto rec = [&](auto&& self, int depth, double prob, std::size_t idx) -> void {
    if (depth == m) {
      table[idx] += scale * prob;
      return;
    }
    for (int x = 0; x < k; ++x) {
      self(self, depth + 1, prob * p(x), idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(x));
    }
  };
  rec(rec, 0, 1.0, 0);
}

double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

}  // namespace

std::uint64_t type_count(int n, int k) {
  if (n < 0 || k < 1) return 0;
  unsigned __int128 c = 1;
  for (int i = 1; i < k; ++i) {
    c = c * static_cast<unsigned __int128>(n + i) / static_cast<unsigned __int128>(i);
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

TypeEnumerator::TypeEnumerator(int n, int k) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "enumerate_types: n must be at least 1");
  if (k < 1) throw Error(ErrorCode::invalid_argument, "enumerate_types: k must be at least 1");
  const std::uint64_t count = type_count(n, k);
  if (count > kMaxTypes) {
    std::ostringstream os;
    os << "C(n+k-1, k-1) = " << count << " types for n=" << n << ", k=" << k << " exceeds the guard of "
       << kMaxTypes;
    throw Error(ErrorCode::enumeration_guard, os.str());
  }
  cur_.counts.assign(static_cast<std::size_t>(k), 0);
  cur_.counts[0] = n;
  cur_.n = n;
}

bool TypeEnumerator::next() {
  auto& c = cur_.counts;
  const int k = static_cast<int>(c.size());
  int i = k - 2;
  while (i >= 0 && c[static_cast<std::size_t>(i)] == 0) --i;
  if (i < 0) return false;
  int tail = 0;
  for (int j = i + 1; j < k; ++j) {
    tail += c[static_cast<std::size_t>(j)];
    c[static_cast<std::size_t>(j)] = 0;
  }
  --c[static_cast<std::size_t>(i)];
  c[static_cast<std::size_t>(i + 1)] = tail + 1;
  return true;
}

std::vector<TypeVector> enumerate_types(int n, int k) {
  TypeEnumerator it(n, k);
  std::vector<TypeVector> out;
  out.reserve(static_cast<std::size_t>(type_count(n, k)));
  do {
    out.push_back(it.current());
  } while (it.next());
  return out;
}

double default_tau(const ConstrainedModel& model, int n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "default_tau: n must be at least 1");
  return model.feature_bound() / (2.0 * n);
}

TypeEnsemble feasible_types(const ConstrainedModel& model, int n, std::optional<double> tau) {
  const double t = tau.value_or(default_tau(model, n));
  if (!(t >= 0.0)) throw Error(ErrorCode::invalid_argument, "feasible_types: tau must be nonnegative");
  const int k = model.k();
  const Eigen::MatrixXd& a = model.features();
  const Eigen::VectorXd log_q = model.q().array().log().matrix();
  // Absorbs roundoff in A c / n so that tau = 0 admits exactly representable hits.
  const double slack = 1e-12 * (1.0 + model.feature_bound() + model.alpha().lpNorm<Eigen::Infinity>());
  const double log_nfact = std::lgamma(n + 1.0);

  TypeEnsemble ens;
  ens.n = n;
  ens.k = k;
  ens.tau = t;
  double closest = std::numeric_limits<double>::infinity();
  Eigen::VectorXd p(k);
  TypeEnumerator it(n, k);
  do {
    const TypeVector& cur = it.current();
    for (int x = 0; x < k; ++x) p(x) = cur.counts[static_cast<std::size_t>(x)];
    const double dev = model.d() == 0 ? 0.0 : (a * p / n - model.alpha()).lpNorm<Eigen::Infinity>();
    closest = std::min(closest, dev);
    if (dev > t + slack) continue;
    double lw = log_nfact;
    for (int x = 0; x < k; ++x) {
      const int c = cur.counts[static_cast<std::size_t>(x)];
      lw += c * log_q(x) - std::lgamma(c + 1.0);
    }
    ens.types.push_back(cur);
    ens.log_weights.push_back(lw);
  } while (it.next());

  if (ens.types.empty()) {
    std::ostringstream os;
    os << "no type of size " << n << " within tau = " << t << " of the constraints; smallest admissible tau is "
       << closest;
    throw EmptyFeasibleSet(closest, os.str());
  }
  const double lse = log_sum_exp(ens.log_weights);
  ens.weights.reserve(ens.log_weights.size());
  for (double lw : ens.log_weights) ens.weights.push_back(std::exp(lw - lse));
  return ens;
}

std::size_t sequence_index(std::span<const int> seq, int k) {
  std::size_t idx = 0;
  for (int s : seq) {
    if (s < 0 || s >= k) throw Error(ErrorCode::out_of_range_symbol, "sequence symbol out of range");
    idx = idx * static_cast<std::size_t>(k) + static_cast<std::size_t>(s);
  }
  return idx;
}

std::vector<int> sequence_at(std::size_t index, int k, int m) {
  std::vector<int> seq(static_cast<std::size_t>(m));
  for (int i = m - 1; i >= 0; --i) {
    seq[static_cast<std::size_t>(i)] = static_cast<int>(index % static_cast<std::size_t>(k));
    index /= static_cast<std::size_t>(k);
  }
  return seq;
}

double PredictiveLaw::at(std::span<const int> seq) const {
  if (static_cast<int>(seq.size()) != m) throw Error(ErrorCode::shape_mismatch, "sequence length differs from m");
  return table[sequence_index(seq, k)];
}

PredictiveLaw without_replacement_law(const TypeVector& type, int m) {
  if (m > type.n) {
    throw Error(ErrorCode::invalid_argument, "without_replacement_law: m = " + std::to_string(m) +
                                                 " exceeds n = " + std::to_string(type.n));
  }
  PredictiveLaw law{type.k(), m, LawKind::exact, std::vector<double>(table_size(type.k(), m), 0.0)};
  accumulate_urn(type.counts, type.n, m, 1.0, law.table);
  return law;
}

PredictiveLaw product_law(const Eigen::VectorXd& p, int m) {
  const int k = static_cast<int>(p.size());
  PredictiveLaw law{k, m, LawKind::product_benchmark, std::vector<double>(table_size(k, m), 0.0)};
  accumulate_product(p, m, 1.0, law.table);
  return law;
}

PredictiveLaw predictive_exact(const TypeEnsemble& ensemble, int m) {
  if (ensemble.types.empty()) throw Error(ErrorCode::empty_feasible_set, "predictive_exact: empty ensemble");
  if (m > ensemble.n) throw Error(ErrorCode::invalid_argument, "predictive_exact: m exceeds n");
  PredictiveLaw law{ensemble.k, m, LawKind::exact, std::vector<double>(table_size(ensemble.k, m), 0.0)};
  for (std::size_t i = 0; i < ensemble.types.size(); ++i) {
    accumulate_urn(ensemble.types[i].counts, ensemble.n, m, ensemble.weights[i], law.table);
  }
  return law;
}

double tv_distance(const PredictiveLaw& p, const PredictiveLaw& q) {
  if (p.k != q.k || p.m != q.m || p.table.size() != q.table.size()) {
    throw Error(ErrorCode::shape_mismatch, "tv_distance: laws have different shapes");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.table.size(); ++i) s += std::abs(p.table[i] - q.table[i]);
  return 0.5 * s;
}

HypergeometricCheck hypergeometric_bound_check(const TypeVector& type, int m) {
  if (type.n < 1) throw Error(ErrorCode::invalid_argument, "hypergeometric_bound_check: empty type");
  const int c_min = *std::min_element(type.counts.begin(), type.counts.end());
  if (c_min <= 0) throw Error(ErrorCode::zero_probability, "hypergeometric_bound_check: type has a zero count");
  HypergeometricCheck out;
  out.tv = tv_distance(without_replacement_law(type, m), product_law(type.probabilities(), m));
  const double p_min = static_cast<double>(c_min) / type.n;
  out.bound = static_cast<double>(m) * (m - 1) / (2.0 * type.n * p_min);
  out.ok = out.tv <= out.bound + 1e-15;
  return out;
}

MixtureApproximation gaussian_mixture_approx(const ConstrainedModel& model, const Projection& proj,
                                             const CurvatureReport& curv, int n, int m) {
  MixtureApproximation out;
  const int k = model.k();
  const int r = curv.r();
  if (r == 0) {
    out.law = product_law(proj.p_star, m);
    out.law.kind = LawKind::gaussian_mixture;
    out.degenerate = true;
    out.nodes_used = 1;
    return out;
  }
  if (r > 3) {
    throw Error(ErrorCode::invalid_argument,
                "gaussian_mixture_approx: tangent dimension " + std::to_string(r) + " exceeds the quadrature cap of 3");
  }
  const LanfordWindow win = lanford_radius(curv.lambda_min, n);
  const double spacing = 2.0 * win.rho_n / 21.0;
  const double cap = win.rho_n + 2.0 * spacing;
  const int half = static_cast<int>(std::ceil(cap / spacing));
  const double log_norm = 0.5 * std::log(curv.det_h) - 0.5 * r * std::log(2.0 * M_PI) + r * std::log(spacing);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));

  out.spacing = spacing;
  out.law = PredictiveLaw{k, m, LawKind::gaussian_mixture, std::vector<double>(table_size(k, m), 0.0)};
  std::vector<int> idx(static_cast<std::size_t>(r), -half);
  Eigen::VectorXd v(r);
  double total = 0.0;
  for (;;) {
    for (int i = 0; i < r; ++i) v(i) = spacing * idx[static_cast<std::size_t>(i)];
    if (v.norm() <= cap) {
      const Eigen::VectorXd p = proj.p_star + inv_sqrt_n * (curv.v * v);
      if ((p.array() <= 0.0).any()) {
        ++out.nodes_discarded;
      } else {
        const double w = std::exp(log_norm - 0.5 * v.dot(curv.h_star * v));
        accumulate_product(p, m, w, out.law.table);
        total += w;
        ++out.nodes_used;
      }
    }
    int pos = r - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == half) {
      idx[static_cast<std::size_t>(pos)] = -half;
      --pos;
    }
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::empty_window, "gaussian_mixture_approx: every quadrature node was discarded");
  for (double& x : out.law.table) x /= total;
  return out;
}

double collapse_bound(const CollapseBoundInputs& in) {
  if (in.m < 0 || in.n < 2 || !(in.lambda_min > 0.0) || !(in.p_star_min > 0.0) || in.c_geo < 0.0 ||
      in.c_geo_prime < 0.0) {
    throw Error(ErrorCode::invalid_argument, "collapse_bound: inputs must be positive (n >= 2)");
  }
  if (in.m == 0) return 0.0;
  const double mm = static_cast<double>(in.m);
  return in.c_geo * collapse_rate_term(in.m, in.n, in.lambda_min) + in.c_geo_prime * mm * mm / (in.n * in.p_star_min);
}

ResidualReport quadratic_residual(const ConstrainedModel& model, const TypeEnsemble& ensemble,
                                  const Projection& proj, const CurvatureReport& curv) {
  if (ensemble.types.empty()) throw Error(ErrorCode::empty_feasible_set, "quadratic_residual: empty ensemble");
  const int n = ensemble.n;
  const LanfordWindow win = lanford_radius(curv.lambda_min, n);
  const std::size_t count = ensemble.types.size();

  std::vector<double> dist(count), quad(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd diff = ensemble.types[i].probabilities() - proj.p_star;
    dist[i] = diff.norm();
    const Eigen::VectorXd u = curv.v.transpose() * diff;
    double q = -0.5 * n * u.dot(curv.h_star * u);
    if (model.d() > 0) q -= n * proj.lambda_star.dot(model.features() * diff);
    quad[i] = q;
  }
  ResidualReport rep;
  rep.anchor = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  const double lw0 = ensemble.log_weights[rep.anchor];
  const double q0 = quad[rep.anchor];
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (dist[i] > win.radius_euclidean) continue;
    const double res = std::abs((ensemble.log_weights[i] - lw0) - (quad[i] - q0));
    rep.residuals.push_back(res);
    rep.max_residual = std::max(rep.max_residual, res);
    sum += res;
  }
  if (rep.residuals.empty()) throw Error(ErrorCode::empty_window, "quadratic_residual: no type inside the window");
  rep.window_types = static_cast<int>(rep.residuals.size());
  rep.mean_residual = sum / rep.window_types;
  rep.scaled_max = rep.max_residual / (std::log(static_cast<double>(n)) / std::sqrt(static_cast<double>(n)));
  return rep;
}

WindowMass window_partition(const TypeEnsemble& ensemble, const Eigen::VectorXd& p_star,
                            const LanfordWindow& window) {
  WindowMass out;
  for (std::size_t i = 0; i < ensemble.types.size(); ++i) {
    if (window_member(ensemble.types[i], p_star, window)) {
      out.mass_in += ensemble.weights[i];
    } else {
      out.mass_out += ensemble.weights[i];
    }
  }
  out.scaled_out = ensemble.n * out.mass_out;
  return out;
}

LanfordFixedPoint lanford_fixed_point(const TypeEnsemble& ensemble, const Projection& proj,
                                      const CurvatureReport& curv) {
  if (ensemble.types.empty()) throw Error(ErrorCode::empty_feasible_set, "lanford_fixed_point: empty ensemble");
  const int n = ensemble.n;
  const std::size_t count = ensemble.types.size();
  std::vector<double> log_kernel(count), sq(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd diff = ensemble.types[i].probabilities() - proj.p_star;
    const Eigen::VectorXd u = curv.v.transpose() * diff;
    log_kernel[i] = -0.5 * n * u.dot(curv.h_star * u);
    sq[i] = n * diff.squaredNorm();
  }
  const double lse = log_sum_exp(log_kernel);
  double rho2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) rho2 += sq[i] * std::exp(log_kernel[i] - lse);

  LanfordFixedPoint out;
  out.rho_empirical = std::sqrt(rho2);
  out.rho_formula = lanford_radius(curv.lambda_min, n).rho_n;
  out.ratio = curv.zero_dimensional ? std::numeric_limits<double>::quiet_NaN()
                                    : rho2 * curv.lambda_min / (2.0 * std::log(static_cast<double>(n)));
  return out;
}

}  // namespace collapse
