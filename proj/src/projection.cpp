#include "collapse/projection.hpp"

#include <cmath>
#include <sstream>

#include "collapse/error.hpp"

namespace collapse {
namespace {

struct TiltState {
  Eigen::VectorXd p;
  double log_z = 0.0;
};

TiltState tilt(const Eigen::MatrixXd& a, const Eigen::VectorXd& log_base, const Eigen::VectorXd& lambda) {
  Eigen::VectorXd logits = log_base;
  if (a.rows() > 0) logits += a.transpose() * lambda;
  const double top = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - top).exp().matrix();
  const double s = w.sum();
  return {w / s, top + std::log(s)};
}

}  // namespace

Eigen::VectorXd tilted_distribution(const ConstrainedModel& model, const Eigen::VectorXd& base,
                                    const Eigen::VectorXd& lambda) {
  if (base.size() != model.k() || lambda.size() != model.d()) {
    throw Error(ErrorCode::shape_mismatch, "tilted_distribution: base or lambda has the wrong length");
  }
  if ((base.array() <= 0.0).any()) {
    throw Error(ErrorCode::invalid_argument, "tilted_distribution: base must be strictly positive");
  }
  return tilt(model.features(), base.array().log().matrix(), lambda).p;
}

Projection dual_newton(const ConstrainedModel& model, const Eigen::VectorXd& base,
                       const SolverOptions& opts) {
  if (base.size() != model.k()) throw Error(ErrorCode::shape_mismatch, "dual_newton: base has the wrong length");
  if ((base.array() <= 0.0).any() || !base.allFinite()) {
    throw Error(ErrorCode::invalid_argument, "dual_newton: base must be strictly positive");
  }
  const Eigen::MatrixXd& a = model.features();
  const Eigen::VectorXd& alpha = model.alpha();
  const Eigen::Index d = a.rows();
  const Eigen::VectorXd log_base = base.array().log().matrix();
  const double blowup = 1e3 * std::log(1.0 / opts.tol);

  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
  TiltState st = tilt(a, log_base, lambda);
  auto dual = [&](const Eigen::VectorXd& l, double log_z) { return l.dot(alpha) - log_z; };

  Projection out;
  int it = 0;
  for (;; ++it) {
    const Eigen::VectorXd mean = a * st.p;
    const Eigen::VectorXd grad = alpha - mean;
    if (grad.size() == 0 || grad.lpNorm<Eigen::Infinity>() <= opts.tol) break;
    if (it >= opts.max_iter) {
      std::ostringstream os;
      os << "dual Newton did not converge in " << opts.max_iter << " iterations (gradient "
         << grad.lpNorm<Eigen::Infinity>() << ")";
      throw Error(ErrorCode::max_iterations, os.str());
    }

    const Eigen::MatrixXd centered = a.colwise() - mean;
    const Eigen::MatrixXd cov = centered * st.p.asDiagonal() * centered.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const double cov_scale = std::max(1.0, cov.diagonal().maxCoeff());
    const bool singular = llt.info() != Eigen::Success ||
                          llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-12 * std::sqrt(cov_scale);
    if (singular) {
      if (it > 0 && st.p.minCoeff() < 1e-200) {
        throw Error(ErrorCode::boundary_alpha, "tilted law collapsed onto a face of the simplex");
      }
      throw Error(ErrorCode::singular_hessian, "feature covariance is singular (collinear features)");
    }
    const Eigen::VectorXd step = llt.solve(grad);
    const double slope = grad.dot(step);
    const double g0 = dual(lambda, st.log_z);

    // Once the predicted ascent is below the rounding error of the dual value,
    // the Armijo test is noise; fall back to requiring a smaller gradient.
    const bool in_roundoff = slope <= 1e-13 * (1.0 + std::abs(g0));
    const double gnorm = grad.lpNorm<Eigen::Infinity>();

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Eigen::VectorXd trial = lambda + t * step;
      TiltState ts = tilt(a, log_base, trial);
      const bool ok = in_roundoff ? (alpha - a * ts.p).lpNorm<Eigen::Infinity>() < (1.0 - 0.5 * t) * gnorm + 1e-300
                                  : dual(trial, ts.log_z) >= g0 + opts.armijo * t * slope;
      if (ok) {
        lambda = trial;
        st = std::move(ts);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorCode::max_iterations, "dual Newton line search stalled");
    }
    if (lambda.lpNorm<Eigen::Infinity>() > blowup) {
      throw Error(ErrorCode::boundary_alpha, "dual multiplier diverged: alpha on the hull boundary");
    }
  }

  // Converged to tol; a couple of full Newton steps usually reach rounding level
  // at the cost of two tilts. Keep a step only if it shrinks the gradient.
  for (int polish = 0; polish < 2 && d > 0; ++polish) {
    const Eigen::VectorXd mean = a * st.p;
    const Eigen::VectorXd grad = alpha - mean;
    const Eigen::MatrixXd centered = a.colwise() - mean;
    Eigen::LLT<Eigen::MatrixXd> llt(centered * st.p.asDiagonal() * centered.transpose());
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd trial = lambda + llt.solve(grad);
    TiltState ts = tilt(a, log_base, trial);
    if (!((alpha - a * ts.p).lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>())) break;
    lambda = trial;
    st = std::move(ts);
  }

  if (st.p.minCoeff() < 1e3 * opts.tol) {
    throw Error(ErrorCode::boundary_alpha,
                "projected law has an entry below solver resolution: alpha on the hull boundary");
  }
  out.lambda_star = lambda;
  out.p_star = st.p;
  out.log_Z = st.log_z;
  out.dual_value = dual(lambda, st.log_z);
  out.iterations = it;
  out.kkt_residual = d == 0 ? 0.0 : (a * st.p - alpha).lpNorm<Eigen::Infinity>();
  return out;
}

Projection project(const ConstrainedModel& model, const SolverOptions& opts) {
  require_interior(model);
  return dual_newton(model, model.q(), opts);
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw Error(ErrorCode::shape_mismatch, "kl_divergence: length mismatch");
  double s = 0.0;
  for (Eigen::Index x = 0; x < p.size(); ++x) {
    if (p(x) == 0.0) continue;
    if (!(q(x) > 0.0)) {
      throw Error(ErrorCode::zero_probability,
                  "kl_divergence: Q(" + std::to_string(x + 1) + ") = 0 where P is positive");
    }
    s += p(x) * std::log(p(x) / q(x));
  }
  return std::max(0.0, s);
}

}  // namespace collapse
