#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "prstl/rng.hpp"

namespace prstl {

// hᵀx + c ≤ 0
struct Halfspace {
  Eigen::VectorXd h;
  double c = 0.0;
};

struct Polytope {
  std::vector<Halfspace> halfspaces;

  int dim() const {
    return halfspaces.empty() ? 0 : static_cast<int>(halfspaces.front().h.size());
  }
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  // Intersection: concatenated halfspace lists.
  Polytope intersect(const Polytope& other) const;
};

// Maximizes the inscribed-ball radius. Throws std::runtime_error on an empty
// polytope or when the radius is unbounded.
std::pair<Eigen::VectorXd, double> chebyshev_center(const Polytope& p, int dim);

// Tight axis-aligned bounds [lo, hi] of p, via 2n LPs. Throws if p is empty
// or unbounded along an axis.
std::pair<Eigen::VectorXd, Eigen::VectorXd> axis_aligned_box(const Polytope& p,
                                                             int dim);

// Rejection sampling from the axis-aligned box of `bounds` until the point
// lies in p ∩ bounds. Throws after 10,000 rejected draws.
Eigen::VectorXd uniform_sample(const Polytope& p, const Polytope& bounds,
                               Rng& rng);

} // namespace prstl
