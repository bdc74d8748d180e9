#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "prstl/belief.hpp"
#include "prstl/formula.hpp"
#include "prstl/lqr.hpp"
#include "prstl/rng.hpp"
#include "prstl/system.hpp"
#include "prstl/trajectory.hpp"

namespace prstl {

// One closed-loop rollout. states/observations/estimates hold instants
// 0..T; observations[0] is a zero placeholder (the first measurement is
// taken after the first step). inputs/modes hold steps 0..T−1.
struct ExecutionTrace {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> observations;
  std::vector<GaussianBelief> estimates;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<int> modes;
};

// Steps needed to score f on an execution: the nested formula deadline plus
// one loop period of the plan.
int execution_horizon(const KLTrajectory& plan, const FormulaPtr& f);

// Receding-horizon rollout of the plan: the true initial state is sampled
// from the plan's initial belief, each step applies the planned input plus
// K_0·(planned mean − estimated mean) with the correction scaled back into
// 𝒰, the realized observation feeds a Kalman update, and the plan's loop
// section replays past K. Modes follow the plan.
ExecutionTrace execute(const KLTrajectory& plan, const SwitchedSystem& sys,
                       const LqrParams& lqr, int total_steps, Rng& rng);

// Probability-stripped semantics on a realized trace: each π^μ_ε becomes
// μ(x_k) ≤ 0 (negation complements), mode atoms read qs[k−1] (k = 0 is
// vacuous), and temporal windows are clipped to the trace — an empty window
// leaves always true and until false.
bool trace_sat(const std::vector<Eigen::VectorXd>& xs,
               const std::vector<int>& qs, const FormulaPtr& f, int k);
double trace_rho(const std::vector<Eigen::VectorXd>& xs,
                 const std::vector<int>& qs, const FormulaPtr& f, int k);

struct RunResult {
  bool success = false;
  double rho = 0.0;             // stripped-formula robustness of the true trace
  double instant_product = 1.0; // ∏_k P(estimate ⊨ predicates the plan meets at k)
  Eigen::VectorXd final_state;
};

struct MonteCarloStats {
  int runs = 0;
  int successes = 0;
  double rate = 0.0;
  double mean_rho = 0.0;
  double mean_instant_product = 0.0;
  std::vector<RunResult> results; // run-index order
};

// Independent rollouts over execution_horizon(plan, f) steps; run i draws
// from Rng(seed ⊕ i). Parallelized with OpenMP when available; the serial
// variant is the reference implementation and produces identical results.
MonteCarloStats monte_carlo(const KLTrajectory& plan,
                            const SwitchedSystem& sys, const LqrParams& lqr,
                            const FormulaPtr& f, int runs, std::uint64_t seed);
MonteCarloStats monte_carlo_serial(const KLTrajectory& plan,
                                   const SwitchedSystem& sys,
                                   const LqrParams& lqr, const FormulaPtr& f,
                                   int runs, std::uint64_t seed);

} // namespace prstl
