#include "oracles/lp_vertex_oracle.hpp"

#include <stdexcept>
#include <vector>

namespace prstl::oracle {

VertexLpSolution lp_by_vertices(const Eigen::VectorXd& c,
                                const Eigen::MatrixXd& G,
                                const Eigen::VectorXd& g, double feas_tol) {
  const int d = static_cast<int>(c.size());
  const int rows = static_cast<int>(G.rows());
  if (G.cols() != d || g.size() != rows)
    throw std::invalid_argument("lp_by_vertices: shape mismatch");
  if (rows < d) return {};

  VertexLpSolution best;
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) idx[i] = i;

  Eigen::MatrixXd Asub(d, d);
  Eigen::VectorXd bsub(d);
  while (true) {
    for (int i = 0; i < d; ++i) {
      Asub.row(i) = G.row(idx[i]);
      bsub(i) = g(idx[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Asub);
    if (lu.isInvertible()) {
      Eigen::VectorXd z = lu.solve(bsub);
      if ((G * z - g).maxCoeff() <= feas_tol) {
        double val = c.dot(z);
        if (!best.feasible || val < best.value) {
          best.feasible = true;
          best.value = val;
          best.arg = z;
        }
      }
    }

    int i = d - 1;
    while (i >= 0 && idx[i] == rows - d + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

} // namespace prstl::oracle
