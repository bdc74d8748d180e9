#include "prstl/abstraction.hpp"

#include <algorithm>
#include <stdexcept>

#include "prstl/linprog.hpp"

namespace prstl {

namespace {

// A maximal conjunction of atoms as it occurs in the formula.
struct StateFormula {
  std::vector<ProbPredicate> preds;
  std::set<int> allowed_modes; // already intersected
};

void flatten_and(const FormulaPtr& f, std::vector<ProbPredicate>& preds,
                 std::vector<std::set<int>>& mode_sets,
                 std::vector<FormulaPtr>& temporal) {
  switch (f->kind) {
    case Formula::Kind::Prob:
      preds.push_back(f->pred);
      return;
    case Formula::Kind::Mode:
      mode_sets.push_back(f->modes);
      return;
    case Formula::Kind::And:
      for (const auto& k : f->kids) flatten_and(k, preds, mode_sets, temporal);
      return;
    default:
      temporal.push_back(f);
      return;
  }
}

void harvest(const FormulaPtr& f, const std::set<int>& all_modes,
             std::vector<StateFormula>& out) {
  switch (f->kind) {
    case Formula::Kind::Prob:
    case Formula::Kind::Mode:
    case Formula::Kind::And: {
      std::vector<ProbPredicate> preds;
      std::vector<std::set<int>> mode_sets;
      std::vector<FormulaPtr> temporal;
      flatten_and(f, preds, mode_sets, temporal);
      if (!preds.empty() || !mode_sets.empty()) {
        StateFormula sf;
        sf.preds = std::move(preds);
        sf.allowed_modes = all_modes;
        for (const auto& ms : mode_sets) {
          std::set<int> inter;
          std::set_intersection(sf.allowed_modes.begin(), sf.allowed_modes.end(),
                                ms.begin(), ms.end(),
                                std::inserter(inter, inter.begin()));
          sf.allowed_modes = std::move(inter);
        }
        out.push_back(std::move(sf));
      }
      for (const auto& t : temporal) harvest(t, all_modes, out);
      return;
    }
    case Formula::Kind::Or:
      for (const auto& k : f->kids) harvest(k, all_modes, out);
      return;
    case Formula::Kind::Until:
      harvest(f->kids[0], all_modes, out);
      harvest(f->kids[1], all_modes, out);
      return;
    case Formula::Kind::Always:
      harvest(f->kids[0], all_modes, out);
      return;
  }
}

// ∃ x̂ ∈ 𝒫(from) ∩ ws, u ∈ 𝒰 : A x̂ + B u ∈ 𝒫(to) ∩ ws
bool reachable(const AbstractionState& from, const AbstractionState& to,
               const Mode& md, const SwitchedSystem& sys) {
  std::vector<Halfspace> rows;
  auto add_state_rows = [&](const Polytope& p, bool mapped) {
    for (const auto& hs : p.halfspaces) {
      Halfspace row;
      row.h = Eigen::VectorXd::Zero(sys.n + sys.m);
      if (mapped) {
        row.h.head(sys.n) = md.A.transpose() * hs.h;
        row.h.tail(sys.m) = md.B.transpose() * hs.h;
      } else {
        row.h.head(sys.n) = hs.h;
      }
      row.c = hs.c;
      rows.push_back(std::move(row));
    }
  };
  add_state_rows(from.mean_polytope, false);
  add_state_rows(sys.workspace_bounds, false);
  add_state_rows(to.mean_polytope, true);
  add_state_rows(sys.workspace_bounds, true);
  for (const auto& hs : sys.input_polytope.halfspaces) {
    Halfspace row;
    row.h = Eigen::VectorXd::Zero(sys.n + sys.m);
    row.h.tail(sys.m) = hs.h;
    row.c = hs.c;
    rows.push_back(std::move(row));
  }

  LinearProgram lp;
  lp.c = Eigen::VectorXd::Zero(sys.n + sys.m);
  lp.G = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), sys.n + sys.m);
  lp.g = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    lp.G.row(static_cast<int>(i)) = rows[i].h.transpose();
    lp.g(static_cast<int>(i)) = -rows[i].c;
  }
  LpResult res = lp_solve(lp);
  if (res.status == LpStatus::IterationLimit)
    throw std::runtime_error("build_abstraction: transition LP hit the iteration cap");
  return res.status == LpStatus::Optimal;
}

} // namespace

bool AbstractionTS::has_transition(int from, int q, int to) const {
  return std::binary_search(transitions.begin(), transitions.end(),
                            std::make_tuple(from, q, to));
}

std::vector<std::pair<int, int>> AbstractionTS::successors(int from) const {
  std::vector<std::pair<int, int>> out;
  for (const auto& [f, q, t] : transitions)
    if (f == from) out.emplace_back(q, t);
  return out;
}

const std::set<int>& AbstractionTS::label_of(int id) const {
  if (id < 0 || id >= static_cast<int>(states.size()))
    throw std::invalid_argument("AbstractionTS: unknown state id " +
                                std::to_string(id));
  return states[id].label;
}

AbstractionTS build_abstraction(const FormulaPtr& f, const SwitchedSystem& sys,
                                const GaussianBelief& init) {
  std::set<int> all_modes;
  for (int q : sys.mode_ids()) all_modes.insert(q);

  std::vector<StateFormula> sfs;
  harvest(f, all_modes, sfs);

  AbstractionTS ts;
  ts.actions.assign(all_modes.begin(), all_modes.end());

  auto key_of = [](const StateFormula& sf) {
    std::set<int> ids;
    for (const auto& p : sf.preds) ids.insert(p.id);
    return std::make_pair(ids, sf.allowed_modes);
  };

  std::vector<std::pair<std::set<int>, std::set<int>>> keys;
  std::vector<bool> occurring; // states backed by a formula occurrence
  auto add_state = [&](const StateFormula& sf) -> int {
    auto key = key_of(sf);
    for (size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == key) return static_cast<int>(i);
    AbstractionState st;
    st.id = static_cast<int>(ts.states.size());
    st.label = key.first;
    st.allowed_modes = sf.allowed_modes;
    for (const auto& p : sf.preds) {
      Eigen::VectorXd h = p.negated ? (-p.h).eval() : p.h;
      double c = p.negated ? -p.c : p.c;
      st.mean_polytope.halfspaces.push_back({h, c});
      st.cone.constraints.push_back({h, c, p.eps});
    }
    ts.states.push_back(std::move(st));
    keys.push_back(std::move(key));
    occurring.push_back(false);
    return static_cast<int>(ts.states.size()) - 1;
  };

  for (const auto& sf : sfs) occurring[add_state(sf)] = true;

  // Unconstrained ⊤ joins the state set even when the formula never names it.
  StateFormula top;
  top.allowed_modes = all_modes;
  int top_id = add_state(top);
  (void)top_id;

  // Initial state: occurring containing state with the largest label.
  int best = -1;
  for (const auto& st : ts.states) {
    if (!occurring[st.id]) continue;
    if (!cone_contains(st.cone, init)) continue;
    if (best < 0 || st.label.size() > ts.states[best].label.size()) best = st.id;
  }
  if (best < 0)
    throw NoInitialState(
        "build_abstraction: initial belief contained in no state's cone");
  ts.initial = best;

  for (const auto& from : ts.states) {
    for (int q : ts.actions) {
      const Mode& md = sys.mode(q);
      for (const auto& to : ts.states) {
        if (!to.allowed_modes.count(q)) continue;
        if (reachable(from, to, md, sys))
          ts.transitions.emplace_back(from.id, q, to.id);
      }
    }
  }
  std::sort(ts.transitions.begin(), ts.transitions.end());
  return ts;
}

} // namespace prstl
