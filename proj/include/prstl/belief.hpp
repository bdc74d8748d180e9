#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prstl/polytope.hpp"

namespace prstl {

// X ∼ N(mean, cov). Construction symmetrizes and clamps tiny negative
// eigenvalues; a drift beyond 1e−6 is treated as a bug upstream and throws.
struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianBelief() = default;
  GaussianBelief(Eigen::VectorXd mean_, const Eigen::MatrixXd& cov_);
};

// Repaired copy of a nearly-PSD matrix; throws on symmetry or eigenvalue
// drift beyond 1e−6.
Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& cov);

// One row of ℬ: hᵀx̂ + c + Φ⁻¹(1−eps)·√(hᵀΣh) ≤ 0.
struct ConeConstraint {
  Eigen::VectorXd h;
  double c = 0.0;
  double eps = 0.0;
};

struct BeliefCone {
  std::vector<ConeConstraint> constraints;
};

// Deterministic-confidence term Φ⁻¹(1−eps)·√(hᵀΣh); eps=0 yields 0 when the
// variance along h vanishes and +∞ otherwise.
double cone_term(const ConeConstraint& cc, const Eigen::MatrixXd& cov);

bool cone_contains(const BeliefCone& cone, const GaussianBelief& b,
                   double tol = 1e-9);

// Mean-space shadow of the cone: the same halfspaces with the √ term dropped.
Polytope cone_mean_polytope(const BeliefCone& cone);

} // namespace prstl
