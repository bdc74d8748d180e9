#pragma once

#include <Eigen/Dense>

namespace prstl {

/// min c'z  s.t.  G z <= g,  E z = e, variables free.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd G;
  Eigen::VectorXd g;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd z;
  double value = 0.0;
  int iterations = 0;
};

/// Dense two-phase simplex with Bland's rule. Deterministic: identical inputs
/// give identical results. Feasibility tolerance 1e-7, pivot tolerance 1e-10,
/// iteration cap 1e5 (reported as IterationLimit, never an exception).
LpResult lp_solve(const LinearProgram& lp);

inline constexpr double kLpFeasTol = 1e-7;
inline constexpr double kLpPivotTol = 1e-10;
inline constexpr int kLpMaxIter = 100000;

} // namespace prstl
