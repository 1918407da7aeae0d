#include "collapse/curvature.hpp"

#include <cmath>
#include <limits>

#include "collapse/error.hpp"

namespace collapse {

TangentBasis tangent_basis(const Eigen::MatrixXd& constraints, int k) {
  if (constraints.rows() > 0 && constraints.cols() != k) {
    throw Error(ErrorCode::shape_mismatch, "tangent_basis: constraint matrix must have k columns");
  }
  Eigen::MatrixXd stacked(k, constraints.rows() + 1);
  stacked.col(0).setOnes();
  stacked.rightCols(constraints.rows()) = constraints.transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(stacked);
  qr.setThreshold(1e-10);
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  TangentBasis out;
  out.v = q.rightCols(k - rank);
  out.zero_dimensional = out.v.cols() == 0;
  return out;
}

TangentBasis tangent_basis(const ConstrainedModel& model) {
  return tangent_basis(model.features(), model.k());
}

Eigen::MatrixXd projected_hessian(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& v) {
  if (p_star.size() != v.rows()) throw Error(ErrorCode::shape_mismatch, "projected_hessian: size mismatch");
  if ((p_star.array() <= 0.0).any()) {
    throw Error(ErrorCode::zero_probability, "projected_hessian: p_star has a zero entry");
  }
  const Eigen::MatrixXd h = v.transpose() * p_star.cwiseInverse().asDiagonal() * v;
  return 0.5 * (h + h.transpose());
}

Spectrum min_eigenvalue(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols()) throw Error(ErrorCode::shape_mismatch, "min_eigenvalue: matrix not square");
  Spectrum s;
  if (h.rows() == 0) {
    s.lambda_min = std::numeric_limits<double>::infinity();
    return s;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  // Eigen returns ascending order.
  s.eigenvalues = es.eigenvalues().reverse();
  s.eigenvectors = es.eigenvectors().rowwise().reverse();
  s.lambda_min = es.eigenvalues()(0);
  if (s.lambda_min < -1e-10) {
    throw Error(ErrorCode::not_positive_definite,
                "min_eigenvalue: matrix has eigenvalue " + std::to_string(s.lambda_min));
  }
  return s;
}

SpectralBounds spectral_bounds(const Eigen::MatrixXd& h, int r) {
  if (h.rows() != r || h.cols() != r) throw Error(ErrorCode::shape_mismatch, "spectral_bounds: H is not r x r");
  const Spectrum s = min_eigenvalue(h);
  SpectralBounds b;
  b.lambda_min = s.lambda_min;
  if (r == 0) {
    b.harmonic_mean = std::numeric_limits<double>::quiet_NaN();
    return b;
  }
  if (s.lambda_min <= 0.0) throw Error(ErrorCode::not_positive_definite, "spectral_bounds: H is singular");
  b.trace = s.eigenvalues.sum();
  b.trace_inverse = s.eigenvalues.cwiseInverse().sum();
  b.determinant = s.eigenvalues.prod();
  b.harmonic_mean = r / b.trace_inverse;
  const double top = s.eigenvalues(0);
  b.isotropic = (top - s.lambda_min) <= 1e-9 * top;
  b.traceinv_lower_bound_holds = s.lambda_min >= b.harmonic_mean - 1e-9 * b.harmonic_mean;
  return b;
}

CurvatureReport curvature_report(const ConstrainedModel& model, const Projection& proj) {
  CurvatureReport rep;
  const TangentBasis tb = tangent_basis(model);
  rep.v = tb.v;
  rep.zero_dimensional = tb.zero_dimensional;
  rep.compression_bounds = {1.0 / proj.p_max(), 1.0 / proj.p_min()};
  rep.h_star = projected_hessian(proj.p_star, rep.v);
  if (rep.zero_dimensional) {
    rep.lambda_min = std::numeric_limits<double>::infinity();
    rep.lower_bound_traceinv = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  const Spectrum s = min_eigenvalue(rep.h_star);
  const SpectralBounds b = spectral_bounds(rep.h_star, rep.r());
  rep.spectrum = s.eigenvalues;
  rep.lambda_min = s.lambda_min;
  rep.trace_h = b.trace;
  rep.trace_hinv = b.trace_inverse;
  rep.det_h = b.determinant;
  rep.lower_bound_traceinv = b.harmonic_mean;
  return rep;
}

LanfordWindow lanford_radius(double lambda_min, int n) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "lanford_radius: n must be at least 2");
  if (!(lambda_min > 0.0)) throw Error(ErrorCode::invalid_argument, "lanford_radius: lambda_min must be positive");
  LanfordWindow w;
  w.n = n;
  w.rho_n = std::sqrt(2.0 * std::log(static_cast<double>(n)) / lambda_min);
  w.radius_euclidean = w.rho_n / std::sqrt(static_cast<double>(n));
  return w;
}

bool window_member(const TypeVector& type, const Eigen::VectorXd& p_star, const LanfordWindow& window) {
  if (type.n != window.n) throw Error(ErrorCode::shape_mismatch, "window_member: type and window disagree on n");
  if (type.k() != p_star.size()) throw Error(ErrorCode::shape_mismatch, "window_member: alphabet size mismatch");
  return (type.probabilities() - p_star).norm() <= window.radius_euclidean;
}

double sample_size_requirement(int m, double epsilon, double lambda_min) {
  if (m < 1) throw Error(ErrorCode::invalid_argument, "sample_size_plan: m must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::invalid_argument, "sample_size_plan: epsilon must be in (0,1)");
  if (!(lambda_min > 0.0)) throw Error(ErrorCode::invalid_argument, "sample_size_plan: lambda_min must be positive");
  const double mm = static_cast<double>(m);
  return mm * mm * std::log(1.0 / epsilon) / (epsilon * epsilon * lambda_min);
}

std::int64_t sample_size_plan(int m, double epsilon, double lambda_min) {
  return static_cast<std::int64_t>(std::ceil(sample_size_requirement(m, epsilon, lambda_min)));
}

double collapse_rate_term(int m, int n, double lambda_min) {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "collapse_rate_term: n must be at least 2");
  return m * std::sqrt(std::log(static_cast<double>(n)) / (n * lambda_min));
}

Tempering temper(double lambda_hat, double beta, double lambda0) {
  if (!(lambda_hat >= 0.0) || !(beta > 0.0) || !(lambda0 > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "temper: inputs must be positive");
  }
  Tempering t;
  t.temperature = 1.0 + beta * std::log1p(lambda_hat / lambda0);
  t.effective_lambda_min = lambda_hat / t.temperature;
  return t;
}

namespace {

struct Evaluated {
  double lambda_min;
  Eigen::MatrixXd h;
};

Evaluated evaluate(const ConstrainedModel& model, const Eigen::MatrixXd& v) {
  const Projection p = project(model);
  Eigen::MatrixXd h = projected_hessian(p.p_star, v);
  return {min_eigenvalue(h).lambda_min, std::move(h)};
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

StabilityReport perturbation_stability(const ConstrainedModel& model, double delta) {
  if (!(delta >= 0.0)) throw Error(ErrorCode::invalid_argument, "perturbation_stability: delta must be >= 0");
  const TangentBasis tb = tangent_basis(model);
  if (tb.zero_dimensional) {
    throw Error(ErrorCode::invalid_argument, "perturbation_stability: zero-dimensional feasible set");
  }
  const Evaluated base = evaluate(model, tb.v);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(model.k(), 1.0 / model.k());

  auto run = [&](double step, std::vector<Perturbation>* record) {
    double worst = 0.0;
    bool weyl = true;
    auto add = [&](Perturbation p, const ConstrainedModel& moved) {
      const Evaluated e = evaluate(moved, tb.v);
      p.lambda_min = e.lambda_min;
      p.delta_lambda_min = e.lambda_min - base.lambda_min;
      p.delta_h_norm = spectral_norm(e.h - base.h);
      p.weyl_ok = std::abs(p.delta_lambda_min) <= p.delta_h_norm + 1e-10;
      weyl = weyl && p.weyl_ok;
      worst = std::max(worst, std::abs(p.delta_lambda_min));
      if (record) record->push_back(p);
    };
    for (int i = 0; i < model.d(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd a = model.alpha();
        a(i) += sign * step;
        Perturbation p;
        p.target = Perturbation::Target::alpha;
        p.coordinate = i;
        p.sign = sign;
        add(p, model.with_alpha(a));
      }
    }
    Perturbation p;
    p.target = Perturbation::Target::reference;
    p.coordinate = -1;
    add(p, model.with_reference((1.0 - step) * model.q() + step * uniform));
    return std::pair{worst, weyl};
  };

  StabilityReport rep;
  rep.delta = delta;
  rep.lambda_min = base.lambda_min;
  const auto [worst, weyl] = run(delta, &rep.perturbations);
  rep.max_abs_change = worst;
  rep.weyl_ok = weyl;
  rep.lipschitz = delta > 0.0 ? worst / delta : 0.0;
  if (delta > 0.0) {
    const auto [half_worst, half_weyl] = run(0.5 * delta, nullptr);
    rep.lipschitz_ok = half_worst <= 1.1 * rep.lipschitz * 0.5 * delta + 1e-12;
    rep.weyl_ok = rep.weyl_ok && half_weyl;
  }
  return rep;
}

}  // namespace collapse
