#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "prstl/abstraction.hpp"
#include "prstl/bmc.hpp"
#include "prstl/formula.hpp"
#include "prstl/system.hpp"
#include "prstl/trajectory.hpp"

namespace prstl {

// Sampling-tree node. `k` indexes the witness position it simulates; the
// belief always lies inside that state's full cone. `segment` holds the
// (mode, input) steps from the parent; drained nodes stay in the tree for
// path reconstruction but are skipped by selection and propagation.
struct TreeNode {
  int id = 0;
  std::optional<int> parent;
  int k = 0;
  GaussianBelief belief;
  std::vector<KLAction> segment;
  bool active = true;
  double cost = 0.0;
};

struct FeasibilityParams {
  int iters = 1000;
  double t_out_s = 60.0;
  double d_near = 1.0;
  double d_drain = 0.5;
  double bias = 0.25;
  int h_lb = 1;
  int h_ub = 5;
  double delta = 1e-4;
  double eps_loop = 1e-6;
  std::uint64_t seed = 0;
};

// ‖v.mean − target_mean‖₂
double distance(const TreeNode& v, const Eigen::VectorXd& target_mean);

// max over the witness-state label of Φ⁻¹(1−eps)·√(hᵀΣh); 0 on an empty
// label. An eps = 0 row contributes 0 when its variance vanishes and +∞
// otherwise, mirroring cone_term.
double node_cost(const TreeNode& v, const AbstractionTS& ts,
                 const LassoWitness& w);

// Among active nodes within d_near of the sample: minimum cost, ties by
// lowest id; with none in range, the closest node. Returns the node id.
// Throws when no node is active.
int best_nearest(const Eigen::VectorXd& sample_mean,
                 const std::vector<TreeNode>& nodes, double d_near);

// Deactivates every other active node within d_drain of v_new whose cost is
// not smaller.
void drain(std::vector<TreeNode>& nodes, const TreeNode& v_new,
           double d_drain);

// One tree extension. Draws the horizon, then the walk type, then (random
// walk only) the target sample; solves the slack-chained LP; re-propagates
// the beliefs with mlo_step and truncates at the last step whose cone still
// holds. Returns a node with parent/id set by the caller, or nothing when no
// step survives. An LP breakdown is reported through lp_failed.
std::optional<TreeNode> propagate(const TreeNode& v_near,
                                  const AbstractionTS& ts,
                                  const LassoWitness& w,
                                  const FeasibilityParams& params,
                                  const SwitchedSystem& sys, Rng& rng,
                                  bool* lp_failed = nullptr);

// Attempts to close a loop at v (witness position within [L, K]): for each
// whole-period horizon p ≤ h_ub solve the mean-cycle LP along the witness
// loop ordering and propagate covariances with mlo_step. Accepts when every
// loop belief stays in its region's cone and every formula predicate
// satisfied at the loop head has non-growing √(hᵀΣh). On success returns
// the full (K,L)-trajectory from the tree root.
std::optional<KLTrajectory> try_close_loop(const TreeNode& v,
                                           const std::vector<TreeNode>& tree,
                                           const AbstractionTS& ts,
                                           const LassoWitness& w,
                                           const FormulaPtr& f,
                                           const SwitchedSystem& sys,
                                           const FeasibilityParams& params);

enum class FeasibilityStatus { Found, Infeasible };

struct FeasibilityStats {
  int iterations = 0;
  int nodes_inserted = 0;
  int lp_failures = 0;
  int loops_closed = 0;
  double best_rho = -std::numeric_limits<double>::infinity();
  double elapsed_s = 0.0;
};

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::Infeasible;
  KLTrajectory trajectory; // Found
  FairTS cex;              // Infeasible
  FeasibilityStats stats;
};

// Sparse-tree search for a (K,L)-trajectory inside the witness tunnel.
// Selection weights active nodes by 1/(cost + 1e−3); every inserted
// node is first offered a loop closure, and closed trajectories are scored
// with the original timed formula, keeping the best ρ ≥ 0. Stops after
// params.iters iterations or t_out_s seconds, whichever comes first; on
// failure returns the fair-TS counterexample of the longest reached prefix.
// `trace` (optional) receives one CSV row per iteration.
FeasibilityResult feasibility_search(const AbstractionTS& ts,
                                     const LassoWitness& w,
                                     const GaussianBelief& init,
                                     const SwitchedSystem& sys,
                                     const FormulaPtr& f,
                                     const FeasibilityParams& params,
                                     std::ostream* trace = nullptr);

} // namespace prstl
