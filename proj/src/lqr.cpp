#include "prstl/lqr.hpp"

#include <stdexcept>

namespace prstl {

const Eigen::MatrixXd& LqrParams::q_for(int mode) const {
  auto it = Q_by_mode.find(mode);
  return it == Q_by_mode.end() ? Q : it->second;
}

std::vector<Eigen::MatrixXd> lqr_gains(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R, int h) {
  const auto n = A.rows();
  const auto m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m)
    throw std::invalid_argument("lqr_gains: inconsistent dimensions");
  if (h < 1) throw std::invalid_argument("lqr_gains: horizon must be >= 1");
  {
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("lqr_gains: R is not positive definite");
  }

  std::vector<Eigen::MatrixXd> gains(h);
  Eigen::MatrixXd P = Q; // terminal cost
  for (int t = h - 1; t >= 0; --t) {
    Eigen::MatrixXd S = R + B.transpose() * P * B;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible())
      throw std::runtime_error("lqr_gains: singular R + B'PB");
    Eigen::MatrixXd K = lu.solve(B.transpose() * P * A);
    P = Q + A.transpose() * P * (A - B * K);
    gains[t] = std::move(K);
  }
  return gains;
}

} // namespace prstl
