#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace prstl {

struct LqrParams {
  Eigen::MatrixXd Q;                    // state cost, PSD
  std::map<int, Eigen::MatrixXd> Q_by_mode; // optional per-mode overrides
  Eigen::MatrixXd R;                    // input cost, PD
  int horizon = 1;

  const Eigen::MatrixXd& q_for(int mode) const;
};

// Finite-horizon discrete Riccati recursion with terminal cost Q. Returns the
// h gains in forward order (K_0 first); receding-horizon tracking uses K_0.
// Throws on inconsistent dimensions, h < 1, R not PD, or a singular
// (R + BᵀPB).
std::vector<Eigen::MatrixXd> lqr_gains(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R, int h);

} // namespace prstl
