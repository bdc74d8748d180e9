#include "prstl/belief.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "prstl/gauss.hpp"

namespace prstl {

Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols())
    throw std::invalid_argument("psd_repair: matrix not square");
  double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-6)
    throw std::runtime_error("psd_repair: symmetry drift beyond 1e-6");
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -1e-6)
    throw std::runtime_error("psd_repair: eigenvalue drift beyond 1e-6");
  bool clamped = false;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) { ev(i) = 0.0; clamped = true; }
  }
  if (!clamped) return sym;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

GaussianBelief::GaussianBelief(Eigen::VectorXd mean_, const Eigen::MatrixXd& cov_)
    : mean(std::move(mean_)), cov(psd_repair(cov_)) {
  if (cov.rows() != mean.size())
    throw std::invalid_argument("GaussianBelief: mean/cov dimension mismatch");
}

double cone_term(const ConeConstraint& cc, const Eigen::MatrixXd& cov) {
  double var = cc.h.dot(cov * cc.h);
  if (var < 0.0) var = 0.0; // numerical dust from a repaired covariance
  if (cc.eps == 0.0)
    return var == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return gauss_quantile(1.0 - cc.eps) * std::sqrt(var);
}

bool cone_contains(const BeliefCone& cone, const GaussianBelief& b,
                   double tol) {
  for (const auto& cc : cone.constraints) {
    if (cc.h.size() != b.mean.size())
      throw std::invalid_argument("cone_contains: dimension mismatch");
    if (cc.h.dot(b.mean) + cc.c + cone_term(cc, b.cov) > tol) return false;
  }
  return true;
}

Polytope cone_mean_polytope(const BeliefCone& cone) {
  Polytope p;
  p.halfspaces.reserve(cone.constraints.size());
  for (const auto& cc : cone.constraints) p.halfspaces.push_back({cc.h, cc.c});
  return p;
}

} // namespace prstl
