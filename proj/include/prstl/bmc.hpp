#pragma once

#include <optional>
#include <vector>

#include "prstl/abstraction.hpp"
#include "prstl/formula.hpp"

namespace prstl {

// Excluded abstraction trajectory as a fair transition system (tracker
// states 0..I plus an accepting deviation sink I+1). With `loop` set the
// end state may loop back to L or stutter in place; without it the end
// state absorbs every observation, excluding all extensions of the prefix.
struct FairTS {
  std::vector<int> states;  // s̃_0..s̃_I
  std::vector<int> actions; // q_0..q_{I−1}
  std::optional<int> loop;  // L, 1 ≤ L ≤ I

  int end() const { return static_cast<int>(states.size()) - 1; }
  int acc() const { return static_cast<int>(states.size()); }
};

// Deterministic tracker update on observing the transition (s, q, s2).
// Priority: advance, then stutter, then regress; the k=0 stutter reads q_0.
int fair_step(const FairTS& cex, int tracker, int s, int q, int s2);

struct LassoWitness {
  std::vector<int> states; // s̃_0..s̃_K
  std::vector<int> modes;  // q_0..q_{K−1}
  int L = 1;
};

// LTL-without-next over the lasso word: position k carries label(k) and the
// incoming action modes[k−1]; the successor of K is L. Until/Eventually by
// least fixpoint, Always by greatest.
bool lasso_ltl_sat(const std::vector<std::set<int>>& labels,
                   const std::vector<int>& modes, int L, const LtlPtr& f);

enum class BmcStatus { Sat, NoWitnessAtBound, Exhausted };

struct BmcResult {
  BmcStatus status = BmcStatus::NoWitnessAtBound;
  LassoWitness witness; // valid when status == Sat
};

// Depth-first enumeration of length-K action/state paths of the product of
// `abs` with the counterexample trackers; returns the lexicographically
// first fair lasso satisfying f (modes ascending, then target ids, loop
// positions ascending). Exhausted when no duplicate-free product path of
// length K exists.
BmcResult bmc_search(const AbstractionTS& abs, const LtlPtr& f,
                     const std::vector<FairTS>& cexs, int K);

} // namespace prstl
