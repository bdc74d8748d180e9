#pragma once

#include <Eigen/Dense>

namespace prstl::oracle {

struct VertexLpSolution {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd arg;
};

// min cᵀz subject to Gz ≤ g, solved by enumerating every d-row active set,
// inverting it, and keeping feasible intersection points. Correct whenever
// the feasible set is bounded (every bounded polyhedron attains the optimum
// at a vertex); callers guarantee boundedness.
VertexLpSolution lp_by_vertices(const Eigen::VectorXd& c,
                                const Eigen::MatrixXd& G,
                                const Eigen::VectorXd& g,
                                double feas_tol = 1e-6);

} // namespace prstl::oracle
