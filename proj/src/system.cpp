#include "prstl/system.hpp"

#include <stdexcept>

namespace prstl {

const Mode& SwitchedSystem::mode(int q) const {
  for (const auto& md : modes)
    if (md.id == q) return md;
  throw std::invalid_argument("SwitchedSystem: unknown mode id " +
                              std::to_string(q));
}

std::vector<int> SwitchedSystem::mode_ids() const {
  std::vector<int> ids;
  ids.reserve(modes.size());
  for (const auto& md : modes) ids.push_back(md.id);
  return ids;
}

Eigen::MatrixXd noise_matrix(const Mode& mode, const Eigen::VectorXd& x) {
  const int p = static_cast<int>(mode.C.rows());
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) V(i, i) = eval_noise(mode.noise[i], x);
  return V;
}

} // namespace prstl
