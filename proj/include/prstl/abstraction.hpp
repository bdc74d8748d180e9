#pragma once

#include <set>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "prstl/belief.hpp"
#include "prstl/formula.hpp"
#include "prstl/polytope.hpp"
#include "prstl/system.hpp"

namespace prstl {

// One maximal state formula of the specification: its probabilistic
// conjuncts as a mean polytope / belief cone, plus the modes its mode
// predicates allow (the full set when it has none).
struct AbstractionState {
  int id = -1;
  std::set<int> label;         // ProbPredicate ids
  std::set<int> allowed_modes; // guard on the entering action
  Polytope mean_polytope;
  BeliefCone cone;
};

struct AbstractionTS {
  std::vector<AbstractionState> states;
  int initial = -1;
  std::vector<int> actions; // mode ids, ascending
  std::vector<std::tuple<int, int, int>> transitions; // (from, q, to), sorted

  bool has_transition(int from, int q, int to) const;
  // (q, to) pairs from `from`, ordered q ascending then target id ascending.
  std::vector<std::pair<int, int>> successors(int from) const;
  const std::set<int>& label_of(int id) const;
};

// Thrown when the initial belief lies in no occurring state formula's cone —
// the specification is unsatisfiable from the start.
struct NoInitialState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One state per distinct maximal state formula occurring in f plus an
// unconstrained ⊤ state; transitions by one-step mean-space reachability
// under each mode, guarded by the target's allowed modes.
AbstractionTS build_abstraction(const FormulaPtr& f, const SwitchedSystem& sys,
                                const GaussianBelief& init);

} // namespace prstl
