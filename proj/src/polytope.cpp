#include "prstl/polytope.hpp"

#include <stdexcept>

#include "prstl/linprog.hpp"

namespace prstl {

bool Polytope::contains(const Eigen::VectorXd& x, double tol) const {
  for (const auto& hs : halfspaces) {
    if (hs.h.size() != x.size())
      throw std::invalid_argument("Polytope::contains: dimension mismatch");
    if (hs.h.dot(x) + hs.c > tol) return false;
  }
  return true;
}

Polytope Polytope::intersect(const Polytope& other) const {
  Polytope out = *this;
  out.halfspaces.insert(out.halfspaces.end(), other.halfspaces.begin(),
                        other.halfspaces.end());
  return out;
}

std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& p,
                                                    int dim) {
  // max r s.t. hᵢᵀx + cᵢ + ‖hᵢ‖r ≤ 0; variables (x, r).
  const int m = static_cast<int>(p.halfspaces.size());
  LinearProgram lp;
  lp.c = Eigen::VectorXd::Zero(dim + 1);
  lp.c(dim) = -1.0;
  lp.G = Eigen::MatrixXd::Zero(m + 1, dim + 1);
  lp.g = Eigen::VectorXd::Zero(m + 1);
  for (int i = 0; i < m; ++i) {
    const auto& hs = p.halfspaces[i];
    lp.G.row(i).head(dim) = hs.h.transpose();
    lp.G(i, dim) = hs.h.norm();
    lp.g(i) = -hs.c;
  }
  lp.G(m, dim) = -1.0; // r ≥ 0
  lp.g(m) = 0.0;
  LpResult res = lp_solve(lp);
  if (res.status == LpStatus::Infeasible)
    throw std::runtime_error("chebyshev_center: empty polytope");
  if (res.status == LpStatus::Unbounded)
    throw std::runtime_error("chebyshev_center: unbounded radius");
  if (res.status != LpStatus::Optimal)
    throw std::runtime_error("chebyshev_center: LP did not converge");
  return {res.z.head(dim), res.z(dim)};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> axis_aligned_box(const Polytope& p,
                                                             int dim) {
  const int m = static_cast<int>(p.halfspaces.size());
  LinearProgram lp;
  lp.G = Eigen::MatrixXd::Zero(m, dim);
  lp.g = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    lp.G.row(i) = p.halfspaces[i].h.transpose();
    lp.g(i) = -p.halfspaces[i].c;
  }
  Eigen::VectorXd lo(dim), hi(dim);
  for (int j = 0; j < dim; ++j) {
    for (int sign : {+1, -1}) {
      lp.c = Eigen::VectorXd::Zero(dim);
      lp.c(j) = sign; // min x_j (sign=+1) / max x_j (sign=-1)
      LpResult res = lp_solve(lp);
      if (res.status == LpStatus::Infeasible)
        throw std::runtime_error("axis_aligned_box: empty polytope");
      if (res.status != LpStatus::Optimal)
        throw std::runtime_error("axis_aligned_box: polytope unbounded along an axis");
      (sign > 0 ? lo(j) : hi(j)) = res.z(j);
    }
  }
  return {lo, hi};
}

Eigen::VectorXd uniform_sample(const Polytope& p, const Polytope& bounds,
                               Rng& rng) {
  const int dim = bounds.dim();
  auto [lo, hi] = axis_aligned_box(bounds, dim);
  Eigen::VectorXd x(dim);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int j = 0; j < dim; ++j) x(j) = rng.uniform(lo(j), hi(j));
    if (p.contains(x, 0.0) && bounds.contains(x, 0.0)) return x;
  }
  throw std::runtime_error("uniform_sample: no accepted point in 10000 draws");
}

} // namespace prstl
