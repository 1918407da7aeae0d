#include "collapse/moments.hpp"

#include <cmath>

#include "collapse/curvature.hpp"
#include "collapse/error.hpp"

namespace collapse {
namespace {

// Inverts a symmetric matrix, reporting the weakest direction when it is
// numerically singular.
Eigen::MatrixXd symmetric_inverse(const Eigen::MatrixXd& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.size() > 0 && ev(0) <= 1e-12 * scale) {
    throw SingularMatrix(es.eigenvectors().col(0), std::string(what) + " is singular (smallest eigenvalue " +
                                                        std::to_string(ev(0)) + ")");
  }
  const Eigen::MatrixXd inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

GmmWeight gmm_weight(const Eigen::VectorXd& p_star, const Eigen::MatrixXd& features, TangentKind kind) {
  const int k = static_cast<int>(p_star.size());
  if (features.cols() != k) throw Error(ErrorCode::shape_mismatch, "gmm_weight: feature matrix must have k columns");
  const TangentBasis tb = kind == TangentKind::simplex_tangent ? tangent_basis(Eigen::MatrixXd(0, k), k)
                                                               : tangent_basis(features, k);
  GmmWeight out;
  out.tangent_kind = kind;
  if (tb.dim() == 0) {
    out.pushforward = Eigen::MatrixXd::Zero(features.rows(), features.rows());
  } else {
    const Eigen::MatrixXd h = projected_hessian(p_star, tb.v);
    const Eigen::MatrixXd av = features * tb.v;
    const Eigen::MatrixXd pf = av * h.ldlt().solve(av.transpose());
    out.pushforward = 0.5 * (pf + pf.transpose());
  }
  out.w_opt = symmetric_inverse(out.pushforward, "GMM pushforward");
  return out;
}

double gmm_objective(const TypeVector& data, const Eigen::MatrixXd& features, const Eigen::VectorXd& alpha,
                     const Eigen::MatrixXd& w) {
  if (features.cols() != data.k() || features.rows() != alpha.size() || w.rows() != alpha.size() ||
      w.cols() != alpha.size()) {
    throw Error(ErrorCode::shape_mismatch, "gmm_objective: dimension mismatch");
  }
  if (data.n == 0) return 0.0;
  const Eigen::VectorXd g = features * data.probabilities() - alpha;
  return 0.5 * data.n * g.dot(w * g);
}

double GeeCurvature::rate_proxy(int n) const {
  if (n < 2) throw Error(ErrorCode::invalid_argument, "rate_proxy: n must be at least 2");
  return std::sqrt(std::log(static_cast<double>(n)) / (n * lambda_min_j));
}

GeeCurvature gee_curvature(const std::vector<GeeCluster>& clusters) {
  if (clusters.empty()) throw Error(ErrorCode::invalid_argument, "gee_curvature: no clusters");
  const Eigen::Index p = clusters.front().d.cols();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const auto& c = clusters[i];
    const Eigen::Index q = c.d.rows();
    if (c.d.cols() != p || c.w.rows() != q || c.w.cols() != q || c.sigma.rows() != q || c.sigma.cols() != q) {
      throw Error(ErrorCode::shape_mismatch, "gee_curvature: cluster " + std::to_string(i) + " has inconsistent dimensions");
    }
    const Eigen::MatrixXd wd = c.w * c.d;
    j += c.d.transpose() * wd;
    k += wd.transpose() * c.sigma * wd;
  }
  const double count = static_cast<double>(clusters.size());
  GeeCurvature out;
  out.j = 0.5 * (j + j.transpose()) / count;
  out.k = 0.5 * (k + k.transpose()) / count;
  const Eigen::MatrixXd jinv = symmetric_inverse(out.j, "GEE curvature J");
  const Eigen::MatrixXd s = jinv * out.k * jinv;
  out.sandwich = 0.5 * (s + s.transpose());
  out.lambda_min_j = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(out.j, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return out;
}

Comparability curvature_comparability(const Eigen::MatrixXd& j, const Eigen::MatrixXd& h, double a, double b) {
  if (j.rows() != j.cols() || h.rows() != h.cols() || j.rows() != h.rows()) {
    throw Error(ErrorCode::shape_mismatch, "curvature_comparability: J and H must be square of equal size");
  }
  auto min_eig = [](const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
        .eigenvalues()(0);
  };
  Comparability out;
  out.lower_margin = min_eig(j - a * h);
  out.upper_margin = min_eig(b * h - j);
  out.lower_holds = out.lower_margin >= -1e-10;
  out.upper_holds = out.upper_margin >= -1e-10;
  return out;
}

}  // namespace collapse
