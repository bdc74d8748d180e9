#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prstl/belief.hpp"
#include "prstl/formula.hpp"
#include "prstl/system.hpp"

namespace prstl {

struct KLAction {
  int q = 0;
  Eigen::VectorXd u;
};

// X_0 →(a_0) X_1 … X_{L−1} ( →(a_{L−1}) X_L … X_K )^ω with
// mean_K = mean_{L−1}; the loop replays actions L−1..K−1.
struct KLTrajectory {
  std::vector<GaussianBelief> beliefs; // 0..K
  std::vector<KLAction> actions;       // 0..K−1
  int K = 0;
  int L = 1;
  double eps_loop = 1e-6;
  const SwitchedSystem* sys = nullptr; // needed to re-propagate unrolled loops

  int period() const { return K + 1 - L; }
};

// ρ of a single predicate against a belief (sign flipped when negated);
// eps = 0 collapses to the mean margin when the variance along h vanishes
// and −∞ otherwise.
double pred_margin(const ProbPredicate& p, const GaussianBelief& b);

// Throws unless shapes are consistent, 1 ≤ L ≤ K, the loop means close
// within eps_loop, and every closure predicate of `formula` satisfied at
// L−1 has √(hᵀΣ_K h) ≤ √(hᵀΣ_{L−1} h) + eps_loop.
void validate_kl(const KLTrajectory& t, const FormulaPtr& formula);

// Repeats the loop segment N extra times; means repeat verbatim, covariances
// re-propagated by mlo_step. Throws when the replayed means drift off the
// recorded loop by more than eps_loop.
KLTrajectory unroll(int N, const KLTrajectory& t, const SwitchedSystem& sys);

bool sat_bool(const KLTrajectory& t, const FormulaPtr& f, int k);
double rho(const KLTrajectory& t, const FormulaPtr& f, int k);

} // namespace prstl
