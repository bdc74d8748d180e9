#pragma once

#include <Eigen/Dense>
#include <utility>

#include "prstl/belief.hpp"
#include "prstl/rng.hpp"
#include "prstl/system.hpp"

namespace prstl {

struct KalmanIntermediates {
  Eigen::MatrixXd sigma_prior;    // AΣAᵀ + WWᵀ
  Eigen::MatrixXd innovation_cov; // CΣ⁺Cᵀ + VVᵀ
  Eigen::MatrixXd gain;           // Σ⁺CᵀS⁻¹
};

// Exact Kalman update with the realized observation y. Throws when u is
// outside the input polytope (tolerance 1e−9) or the innovation covariance is
// singular (condition number > 1e12).
std::pair<GaussianBelief, KalmanIntermediates> kf_step(const GaussianBelief& b,
                                                       int q,
                                                       const Eigen::VectorXd& u,
                                                       const Eigen::VectorXd& y,
                                                       const SwitchedSystem& sys);

// Maximum-likelihood-observation belief update: mean follows the noiseless
// system exactly, covariance follows the Kalman recursion.
GaussianBelief mlo_step(const GaussianBelief& b, int q, const Eigen::VectorXd& u,
                        const SwitchedSystem& sys);

// Prediction-only baseline: no measurement is incorporated.
GaussianBelief open_loop_cov(const GaussianBelief& b, int q,
                             const Eigen::VectorXd& u,
                             const SwitchedSystem& sys);

// Draws process and observation noise; returns (next state, observation at
// the next state).
std::pair<Eigen::VectorXd, Eigen::VectorXd> simulate_step(
    const Eigen::VectorXd& x, int q, const Eigen::VectorXd& u,
    const SwitchedSystem& sys, Rng& rng);

} // namespace prstl
