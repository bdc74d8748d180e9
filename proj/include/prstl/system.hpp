#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prstl/noise_expr.hpp"
#include "prstl/polytope.hpp"

namespace prstl {

// x' = A x + B u + W w,  y' = C x' + diag(n_q(·)) v,  w,v ∼ N(0,I)
struct Mode {
  int id = 0;
  Eigen::MatrixXd A, B, W, C;
  std::vector<NoiseExpr> noise; // one expression per output row
};

enum class NoiseAt { Current, Predicted };

struct SwitchedSystem {
  int n = 0, m = 0, p = 0;
  std::vector<Mode> modes;
  Polytope input_polytope;   // over R^m
  Polytope workspace_bounds; // over R^n
  double sampling_period = 1.0;
  NoiseAt noise_at = NoiseAt::Predicted;

  const Mode& mode(int q) const;
  std::vector<int> mode_ids() const;
};

// Diagonal observation-noise matrix V_q with entries n_q(x) per output row.
Eigen::MatrixXd noise_matrix(const Mode& mode, const Eigen::VectorXd& x);

} // namespace prstl
