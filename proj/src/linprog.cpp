#include "prstl/linprog.hpp"

#include <stdexcept>
#include <vector>

namespace prstl {

namespace {

// Tableau layout: columns [0, nc) structural (z+ then z-), then slacks, then
// artificials, last column RHS. Row 0..m-1 constraints, basis[i] = column
// basic in row i.
struct Tableau {
  Eigen::MatrixXd t;
  std::vector<int> basis;
  int rows;
  int cols; // without RHS
};

// One simplex phase on the tableau with Bland's rule. `cost` is a full-length
// cost row (size cols). Returns status; mutates tableau in place.
LpStatus run_phase(Tableau& tb, const Eigen::VectorXd& cost, int allowed_cols,
                   int& iter_budget) {
  const int m = tb.rows;
  // Reduced costs: d_j = cost_j - cost_B' B^-1 A_j. We maintain them
  // implicitly: recompute the dual row each iteration from the basis; the
  // tableau already stores B^-1 A, so d_j = cost_j - sum_i cost[basis[i]] * t(i,j).
  while (iter_budget-- > 0) {
    // Entering column: smallest index with negative reduced cost.
    int enter = -1;
    for (int j = 0; j < allowed_cols; ++j) {
      double d = cost(j);
      for (int i = 0; i < m; ++i) {
        double cb = cost(tb.basis[i]);
        if (cb != 0.0) d -= cb * tb.t(i, j);
      }
      if (d < -kLpPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return LpStatus::Optimal;

    // Ratio test; ties broken by smallest basic variable index (Bland).
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      double a = tb.t(i, enter);
      if (a > kLpPivotTol) {
        double ratio = tb.t(i, tb.cols) / a;
        if (leave < 0 || ratio < best_ratio - kLpPivotTol ||
            (std::abs(ratio - best_ratio) <= kLpPivotTol &&
             tb.basis[i] < tb.basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return LpStatus::Unbounded;

    // Pivot.
    double piv = tb.t(leave, enter);
    tb.t.row(leave) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double f = tb.t(i, enter);
      if (f != 0.0) tb.t.row(i) -= f * tb.t.row(leave);
    }
    tb.basis[leave] = enter;
  }
  return LpStatus::IterationLimit;
}

} // namespace

LpResult lp_solve(const LinearProgram& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int mi = static_cast<int>(lp.G.rows());
  const int me = static_cast<int>(lp.E.rows());
  if (mi > 0 && lp.G.cols() != n)
    throw std::invalid_argument("lp_solve: G column count mismatch");
  if (me > 0 && lp.E.cols() != n)
    throw std::invalid_argument("lp_solve: E column count mismatch");

  const int m = mi + me;
  const int n_split = 2 * n;          // z = z+ - z-
  const int slack0 = n_split;         // one slack per inequality
  const int art0 = slack0 + mi;       // artificials start here
  // Artificial for every equality and for inequalities with negative RHS.
  std::vector<int> art_for_row(m, -1);
  int n_art = 0;
  for (int r = 0; r < mi; ++r)
    if (lp.g(r) < 0.0) art_for_row[r] = n_art++;
  for (int r = 0; r < me; ++r) art_for_row[mi + r] = n_art++;

  Tableau tb;
  tb.rows = m;
  tb.cols = art0 + n_art;
  tb.t = Eigen::MatrixXd::Zero(m, tb.cols + 1);
  tb.basis.assign(m, -1);

  for (int r = 0; r < m; ++r) {
    Eigen::VectorXd row(n);
    double rhs;
    if (r < mi) {
      row = lp.G.row(r);
      rhs = lp.g(r);
    } else {
      row = lp.E.row(r - mi);
      rhs = lp.e(r - mi);
    }
    double s = 1.0;
    if (rhs < 0.0) { s = -1.0; rhs = -rhs; }
    for (int j = 0; j < n; ++j) {
      tb.t(r, j) = s * row(j);
      tb.t(r, n + j) = -s * row(j);
    }
    if (r < mi) tb.t(r, slack0 + r) = s;
    tb.t(r, tb.cols) = rhs;
    if (art_for_row[r] >= 0) {
      tb.t(r, art0 + art_for_row[r]) = 1.0;
      tb.basis[r] = art0 + art_for_row[r];
    } else {
      tb.basis[r] = slack0 + r; // slack with +1 coefficient
    }
  }

  LpResult res;
  int budget = kLpMaxIter;

  // Phase 1: minimize sum of artificials.
  if (n_art > 0) {
    Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(tb.cols);
    for (int j = art0; j < tb.cols; ++j) cost1(j) = 1.0;
    LpStatus st = run_phase(tb, cost1, tb.cols, budget);
    if (st == LpStatus::IterationLimit) {
      res.status = st;
      res.iterations = kLpMaxIter - budget;
      return res;
    }
    double p1 = 0.0;
    for (int i = 0; i < m; ++i)
      if (tb.basis[i] >= art0) p1 += tb.t(i, tb.cols);
    if (p1 > kLpFeasTol) {
      res.status = LpStatus::Infeasible;
      res.iterations = kLpMaxIter - budget;
      return res;
    }
    // Drive leftover artificials (degenerate at zero) out of the basis.
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] < art0) continue;
      int enter = -1;
      for (int j = 0; j < art0; ++j) {
        if (std::abs(tb.t(i, j)) > kLpPivotTol) { enter = j; break; }
      }
      if (enter < 0) continue; // redundant row, harmless to leave
      double piv = tb.t(i, enter);
      tb.t.row(i) /= piv;
      for (int r = 0; r < m; ++r) {
        if (r == i) continue;
        double f = tb.t(r, enter);
        if (f != 0.0) tb.t.row(r) -= f * tb.t.row(i);
      }
      tb.basis[i] = enter;
    }
  }

  // Phase 2: original objective, artificial columns forbidden.
  Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(tb.cols);
  for (int j = 0; j < n; ++j) {
    cost2(j) = lp.c(j);
    cost2(n + j) = -lp.c(j);
  }
  LpStatus st = run_phase(tb, cost2, art0, budget);
  res.iterations = kLpMaxIter - budget;
  if (st != LpStatus::Optimal) {
    res.status = st;
    return res;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    int b = tb.basis[i];
    if (b < n) z(b) += tb.t(i, tb.cols);
    else if (b < n_split) z(b - n) -= tb.t(i, tb.cols);
  }
  res.status = LpStatus::Optimal;
  res.z = z;
  res.value = lp.c.dot(z);
  return res;
}

} // namespace prstl
