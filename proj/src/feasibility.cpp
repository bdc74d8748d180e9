#include "prstl/feasibility.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "prstl/kalman.hpp"
#include "prstl/linprog.hpp"

namespace prstl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const AbstractionState& state_at(const AbstractionTS& ts,
                                 const LassoWitness& w, int pos) {
  return ts.states[w.states[pos]];
}

int succ_pos(const LassoWitness& w, int pos) {
  return pos < static_cast<int>(w.states.size()) - 1 ? pos + 1 : w.L;
}

// Action entering position `pos`; position 0 borrows the first action.
int action_into(const LassoWitness& w, int pos) {
  return w.modes[pos == 0 ? 0 : pos - 1];
}

// Action leaving position `pos`; the lasso end replays the loop entry.
int action_from(const LassoWitness& w, int pos) {
  return pos < static_cast<int>(w.modes.size()) ? w.modes[pos]
                                                : w.modes[w.L - 1];
}

double cost_of(const GaussianBelief& b, const AbstractionState& s) {
  double out = 0.0;
  for (const auto& cc : s.cone.constraints)
    out = std::max(out, cone_term(cc, b.cov));
  return out;
}

// Tunnel rows of a witness state: its labeled halfspaces plus the workspace
// bounds (region membership in the abstraction is always 𝒫(s̃) ∩ ws).
std::vector<Halfspace> tunnel_rows(const AbstractionState& s,
                                   const SwitchedSystem& sys) {
  std::vector<Halfspace> out;
  for (const auto& cc : s.cone.constraints) out.push_back({cc.h, cc.c});
  for (const auto& hs : sys.workspace_bounds.halfspaces) out.push_back(hs);
  return out;
}

// Worst violation of a tunnel halfspace over the workspace bounds, floored
// at 1; scales the slack chain so one violated step poisons every later one.
double lambda_bar(const AbstractionState& s, const SwitchedSystem& sys) {
  double best = 1.0;
  const auto& rows = sys.workspace_bounds.halfspaces;
  const int n = sys.n;
  for (const auto& hs : tunnel_rows(s, sys)) {
    LinearProgram lp;
    lp.c = -hs.h;
    lp.G.resize(static_cast<int>(rows.size()), n);
    lp.g.resize(static_cast<int>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      lp.G.row(static_cast<int>(i)) = rows[i].h.transpose();
      lp.g(static_cast<int>(i)) = -rows[i].c;
    }
    lp.E.resize(0, n);
    lp.e.resize(0);
    LpResult r = lp_solve(lp);
    if (r.status != LpStatus::Optimal)
      throw std::runtime_error(
          "lambda_bar: workspace bounds empty or unbounded");
    best = std::max(best, -r.value + hs.c);
  }
  return best;
}

// Pulls u toward an interior point just far enough to satisfy every row;
// absorbs LP round-off so downstream input-polytope preconditions hold.
Eigen::VectorXd clamp_into(const Eigen::VectorXd& u, const Polytope& poly,
                           const Eigen::VectorXd& center) {
  double t = 0.0;
  for (const auto& hs : poly.halfspaces) {
    double a = hs.h.dot(u) + hs.c;
    if (a <= 0.0) continue;
    double b = hs.h.dot(center) + hs.c;
    if (b >= a) throw std::runtime_error("clamp_into: center not interior");
    t = std::max(t, a / (a - b));
  }
  if (t == 0.0) return u;
  t = std::min(1.0, t * (1.0 + 1e-12));
  return u + t * (center - u);
}

struct PropagateCtx {
  const AbstractionTS& ts;
  const LassoWitness& w;
  const SwitchedSystem& sys;
  const FeasibilityParams& params;
  const std::map<int, double>& lbar; // abstraction state id → λ̄
  const Eigen::VectorXd& u_center;
};

std::optional<TreeNode> propagate_impl(const TreeNode& v,
                                       const PropagateCtx& c, Rng& rng,
                                       bool* lp_failed) {
  if (lp_failed) *lp_failed = false;
  const SwitchedSystem& sys = c.sys;
  const int n = sys.n;
  const int m = sys.m;
  const int h = rng.uniform_int(c.params.h_lb, c.params.h_ub);
  const bool biased = rng.uniform() < c.params.bias;
  const AbstractionState& cur = state_at(c.ts, c.w, v.k);
  const int next_pos = succ_pos(c.w, v.k);
  const AbstractionState& next = state_at(c.ts, c.w, next_pos);

  Eigen::VectorXd target;
  if (!biased)
    target = uniform_sample(cur.mean_polytope, sys.workspace_bounds, rng);

  const int q_intra = action_into(c.w, v.k);
  const int q_step = action_from(c.w, v.k);

  // variables x_1..x_h, u_0..u_{h−1}, λ_1..λ_h; x_0 and λ_0 = 0 substituted
  auto xi = [&](int k) { return (k - 1) * n; };
  auto ui = [&](int j) { return h * n + j * m; };
  auto li = [&](int k) { return h * (n + m) + (k - 1); };
  const int ncols = h * (n + m + 1);

  const std::vector<Halfspace> cur_rows = tunnel_rows(cur, sys);
  const std::vector<Halfspace> next_rows = tunnel_rows(next, sys);
  const auto& u_rows = sys.input_polytope.halfspaces;
  const int n_ineq =
      h * static_cast<int>(cur_rows.size()) +
      (biased ? static_cast<int>(next_rows.size()) : 2 * n) + h +
      h * static_cast<int>(u_rows.size());

  LinearProgram lp;
  lp.c = Eigen::VectorXd::Zero(ncols);
  lp.c(li(h)) = 1.0;
  lp.E = Eigen::MatrixXd::Zero(h * n, ncols);
  lp.e = Eigen::VectorXd::Zero(h * n);
  lp.G = Eigen::MatrixXd::Zero(n_ineq, ncols);
  lp.g = Eigen::VectorXd::Zero(n_ineq);

  for (int k = 1; k <= h; ++k) { // x_k − A x_{k−1} − B u_{k−1} = 0
    const Mode& md = sys.mode(biased && k == h ? q_step : q_intra);
    const int r0 = (k - 1) * n;
    lp.E.block(r0, xi(k), n, n).setIdentity();
    if (k > 1)
      lp.E.block(r0, xi(k - 1), n, n) = -md.A;
    else
      lp.e.segment(r0, n) = md.A * v.belief.mean;
    lp.E.block(r0, ui(k - 1), n, m) = -md.B;
  }

  int r = 0;
  // tunnel rows hᵀx_{k−1} + c ≤ ‖h‖λ_k
  for (int k = 1; k <= h; ++k)
    for (const auto& hs : cur_rows) {
      if (k == 1) {
        lp.g(r) = -hs.c - hs.h.dot(v.belief.mean);
      } else {
        lp.G.row(r).segment(xi(k - 1), n) = hs.h.transpose();
        lp.g(r) = -hs.c;
      }
      lp.G(r, li(k)) = -hs.h.norm();
      ++r;
    }
  if (biased) { // land in the next tunnel region
    for (const auto& hs : next_rows) {
      lp.G.row(r).segment(xi(h), n) = hs.h.transpose();
      lp.G(r, li(h)) = -hs.h.norm();
      lp.g(r) = -hs.c;
      ++r;
    }
  } else { // chase the sampled mean in Chebyshev distance
    for (int i = 0; i < n; ++i) {
      lp.G(r, xi(h) + i) = 1.0;
      lp.G(r, li(h)) = -1.0;
      lp.g(r) = target(i);
      ++r;
      lp.G(r, xi(h) + i) = -1.0;
      lp.G(r, li(h)) = -1.0;
      lp.g(r) = -target(i);
      ++r;
    }
  }
  // slack chain (λ̄/δ)λ_{k−1} ≤ λ_k
  const double factor = c.lbar.at(c.w.states[v.k]) / c.params.delta;
  for (int k = 1; k <= h; ++k) {
    if (k > 1) lp.G(r, li(k - 1)) = factor;
    lp.G(r, li(k)) = -1.0;
    ++r;
  }
  for (int j = 0; j < h; ++j)
    for (const auto& hs : u_rows) {
      lp.G.row(r).segment(ui(j), m) = hs.h.transpose();
      lp.g(r) = -hs.c;
      ++r;
    }

  LpResult sol = lp_solve(lp);
  if (sol.status != LpStatus::Optimal) {
    if (lp_failed) *lp_failed = true;
    return std::nullopt;
  }

  // replay through the filter; keep the prefix that stays in its cone
  std::vector<KLAction> seg;
  GaussianBelief b = v.belief;
  bool advanced = false;
  for (int k = 1; k <= h; ++k) {
    const bool last_biased = biased && k == h;
    KLAction a;
    a.q = last_biased ? q_step : q_intra;
    a.u = clamp_into(sol.z.segment(ui(k - 1), m), sys.input_polytope,
                     c.u_center);
    GaussianBelief nb = mlo_step(b, a.q, a.u, sys);
    if (!cone_contains(last_biased ? next.cone : cur.cone, nb)) break;
    seg.push_back(std::move(a));
    b = std::move(nb);
    if (last_biased) advanced = true;
  }
  if (seg.empty()) return std::nullopt;

  TreeNode out;
  out.parent = v.id;
  out.k = advanced ? next_pos : v.k;
  out.cost = cost_of(b, advanced ? next : cur);
  out.belief = std::move(b);
  out.segment = std::move(seg);
  return out;
}

} // namespace

double distance(const TreeNode& v, const Eigen::VectorXd& target_mean) {
  if (v.belief.mean.size() != target_mean.size())
    throw std::invalid_argument("distance: dimension mismatch");
  return (v.belief.mean - target_mean).norm();
}

double node_cost(const TreeNode& v, const AbstractionTS& ts,
                 const LassoWitness& w) {
  if (v.k < 0 || v.k >= static_cast<int>(w.states.size()))
    throw std::invalid_argument("node_cost: witness position out of range");
  return cost_of(v.belief, state_at(ts, w, v.k));
}

int best_nearest(const Eigen::VectorXd& sample_mean,
                 const std::vector<TreeNode>& nodes, double d_near) {
  int best_in = -1;
  int best_any = -1;
  double best_cost = kInf;
  double best_dist = kInf;
  for (const auto& nd : nodes) {
    if (!nd.active) continue;
    const double d = distance(nd, sample_mean);
    if (d <= d_near && (best_in < 0 || nd.cost < best_cost)) {
      best_cost = nd.cost;
      best_in = nd.id;
    }
    if (d < best_dist) {
      best_dist = d;
      best_any = nd.id;
    }
  }
  if (best_any < 0)
    throw std::invalid_argument("best_nearest: no active node");
  return best_in >= 0 ? best_in : best_any;
}

void drain(std::vector<TreeNode>& nodes, const TreeNode& v_new,
           double d_drain) {
  for (auto& nd : nodes) {
    if (!nd.active || nd.id == v_new.id) continue;
    if (distance(nd, v_new.belief.mean) <= d_drain && nd.cost >= v_new.cost)
      nd.active = false;
  }
}

std::optional<TreeNode> propagate(const TreeNode& v_near,
                                  const AbstractionTS& ts,
                                  const LassoWitness& w,
                                  const FeasibilityParams& params,
                                  const SwitchedSystem& sys, Rng& rng,
                                  bool* lp_failed) {
  std::map<int, double> lbar;
  lbar.emplace(w.states[v_near.k], lambda_bar(state_at(ts, w, v_near.k), sys));
  const Eigen::VectorXd u_center =
      chebyshev_center(sys.input_polytope, sys.m).first;
  PropagateCtx ctx{ts, w, sys, params, lbar, u_center};
  return propagate_impl(v_near, ctx, rng, lp_failed);
}

std::optional<KLTrajectory> try_close_loop(const TreeNode& v,
                                           const std::vector<TreeNode>& tree,
                                           const AbstractionTS& ts,
                                           const LassoWitness& w,
                                           const FormulaPtr& f,
                                           const SwitchedSystem& sys,
                                           const FeasibilityParams& params) {
  const int K = static_cast<int>(w.states.size()) - 1;
  if (v.k < w.L || v.k > K) return std::nullopt;
  const int n = sys.n;
  const int m = sys.m;
  const Eigen::VectorXd& x0 = v.belief.mean;

  std::vector<ProbPredicate> head;
  for (const auto& p : collect_predicates(f))
    if (pred_margin(p, v.belief) >= -1e-9) head.push_back(p);

  const Eigen::VectorXd u_center =
      chebyshev_center(sys.input_polytope, m).first;

  // horizons follow the abstract loop, so only whole periods line up
  const int period = K + 1 - w.L;
  for (int p = period; p <= params.h_ub; p += period) {
    std::vector<int> pos(p + 1);
    std::vector<int> qs(p);
    pos[0] = v.k;
    for (int j = 0; j < p; ++j) {
      qs[j] = action_from(w, pos[j]);
      pos[j + 1] = succ_pos(w, pos[j]);
    }

    // variables x_1..x_{p−1}, u_0..u_{p−1}; x_0 = x_p = v.mean substituted
    auto xi = [&](int j) { return (j - 1) * n; };
    auto ui = [&](int j) { return (p - 1) * n + j * m; };
    const int ncols = (p - 1) * n + p * m;

    std::vector<std::vector<Halfspace>> rows_at(p);
    for (int j = 1; j <= p - 1; ++j)
      rows_at[j] = tunnel_rows(state_at(ts, w, pos[j]), sys);
    int n_ineq = p * static_cast<int>(sys.input_polytope.halfspaces.size());
    for (int j = 1; j <= p - 1; ++j)
      n_ineq += static_cast<int>(rows_at[j].size());

    LinearProgram lp;
    lp.c = Eigen::VectorXd::Zero(ncols);
    lp.E = Eigen::MatrixXd::Zero(p * n, ncols);
    lp.e = Eigen::VectorXd::Zero(p * n);
    lp.G = Eigen::MatrixXd::Zero(n_ineq, ncols);
    lp.g = Eigen::VectorXd::Zero(n_ineq);

    for (int j = 1; j <= p; ++j) { // x_j − A x_{j−1} − B u_{j−1} = 0
      const Mode& md = sys.mode(qs[j - 1]);
      const int r0 = (j - 1) * n;
      if (j <= p - 1)
        lp.E.block(r0, xi(j), n, n).setIdentity();
      else
        lp.e.segment(r0, n) -= x0;
      if (j >= 2)
        lp.E.block(r0, xi(j - 1), n, n) = -md.A;
      else
        lp.e.segment(r0, n) += md.A * x0;
      lp.E.block(r0, ui(j - 1), n, m) = -md.B;
    }

    int r = 0;
    for (int j = 1; j <= p - 1; ++j)
      for (const auto& hs : rows_at[j]) {
        lp.G.row(r).segment(xi(j), n) = hs.h.transpose();
        lp.g(r) = -hs.c;
        ++r;
      }
    for (int j = 0; j < p; ++j)
      for (const auto& hs : sys.input_polytope.halfspaces) {
        lp.G.row(r).segment(ui(j), m) = hs.h.transpose();
        lp.g(r) = -hs.c;
        ++r;
      }

    LpResult sol = lp_solve(lp);
    if (sol.status != LpStatus::Optimal) continue;

    std::vector<Eigen::VectorXd> us(p);
    std::vector<GaussianBelief> loop;
    GaussianBelief b = v.belief;
    bool in_tunnel = true;
    for (int j = 0; j < p; ++j) {
      us[j] = clamp_into(sol.z.segment(ui(j), m), sys.input_polytope,
                         u_center);
      b = mlo_step(b, qs[j], us[j], sys);
      if (!cone_contains(state_at(ts, w, pos[j + 1]).cone, b)) {
        in_tunnel = false;
        break;
      }
      loop.push_back(b);
    }
    if (!in_tunnel) continue;
    bool contracts = true;
    for (const auto& pr : head) {
      const double end_sd = std::sqrt(
          std::max(0.0, pr.h.dot(loop.back().cov * pr.h)));
      const double head_sd =
          std::sqrt(std::max(0.0, pr.h.dot(v.belief.cov * pr.h)));
      if (end_sd > head_sd + params.eps_loop) {
        contracts = false;
        break;
      }
    }
    if (!contracts) continue;

    // assemble root → v, then the loop
    std::vector<const TreeNode*> chain;
    for (const TreeNode* nd = &v;;) {
      chain.push_back(nd);
      if (!nd->parent) break;
      nd = &tree[*nd->parent];
    }
    std::reverse(chain.begin(), chain.end());

    KLTrajectory t;
    t.eps_loop = params.eps_loop;
    t.sys = &sys;
    GaussianBelief cur = chain.front()->belief;
    t.beliefs.push_back(cur);
    for (size_t i = 1; i < chain.size(); ++i)
      for (const auto& a : chain[i]->segment) {
        cur = mlo_step(cur, a.q, a.u, sys);
        t.beliefs.push_back(cur);
        t.actions.push_back(a);
      }
    t.L = static_cast<int>(t.beliefs.size());
    for (int j = 0; j < p; ++j) {
      t.actions.push_back({qs[j], us[j]});
      t.beliefs.push_back(loop[j]);
    }
    t.K = static_cast<int>(t.beliefs.size()) - 1;
    // snap the closure onto the loop head mean
    t.beliefs.back() =
        GaussianBelief(t.beliefs[t.L - 1].mean, t.beliefs.back().cov);
    validate_kl(t, f);
    return t;
  }
  return std::nullopt;
}

FeasibilityResult feasibility_search(const AbstractionTS& ts,
                                     const LassoWitness& w,
                                     const GaussianBelief& init,
                                     const SwitchedSystem& sys,
                                     const FormulaPtr& f,
                                     const FeasibilityParams& params,
                                     std::ostream* trace) {
  const int K = static_cast<int>(w.states.size()) - 1;
  if (K < 1 || static_cast<int>(w.modes.size()) != K || w.L < 1 || w.L > K)
    throw std::invalid_argument("feasibility_search: malformed witness");
  for (int s : w.states)
    if (s < 0 || s >= static_cast<int>(ts.states.size()))
      throw std::invalid_argument(
          "feasibility_search: witness state out of range");
  if (params.iters < 0 || params.t_out_s <= 0 || params.d_near <= 0 ||
      params.d_drain <= 0 || params.bias < 0 || params.bias > 1 ||
      params.h_lb < 1 || params.h_lb > params.h_ub || params.delta <= 0 ||
      params.eps_loop <= 0)
    throw std::invalid_argument("feasibility_search: bad parameters");
  if (!cone_contains(state_at(ts, w, 0).cone, init))
    throw std::invalid_argument(
        "feasibility_search: initial belief outside the root cone");

  std::map<int, double> lbar;
  for (int s : w.states)
    if (!lbar.count(s)) lbar.emplace(s, lambda_bar(ts.states[s], sys));
  const Eigen::VectorXd u_center =
      chebyshev_center(sys.input_polytope, sys.m).first;
  PropagateCtx ctx{ts, w, sys, params, lbar, u_center};

  Rng rng(params.seed);
  std::vector<TreeNode> tree;
  {
    TreeNode root;
    root.id = 0;
    root.k = 0;
    root.cost = cost_of(init, state_at(ts, w, 0));
    root.belief = init;
    tree.push_back(std::move(root));
  }

  FeasibilityResult res;
  std::optional<KLTrajectory> best;
  double best_rho = -kInf;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  if (trace) *trace << "iter,nodes_active,nodes_total,best_rho\n";

  int it = 0;
  for (; it < params.iters; ++it) {
    if (elapsed() > params.t_out_s) break;

    // selection favors low-cost (low-uncertainty) nodes
    double total = 0.0;
    for (const auto& nd : tree)
      if (nd.active && std::isfinite(nd.cost)) total += 1.0 / (nd.cost + 1e-3);
    int sel = -1;
    if (total > 0.0) {
      double rr = rng.uniform() * total;
      for (const auto& nd : tree) {
        if (!nd.active || !std::isfinite(nd.cost)) continue;
        rr -= 1.0 / (nd.cost + 1e-3);
        sel = nd.id;
        if (rr <= 0.0) break;
      }
    } else {
      for (const auto& nd : tree)
        if (nd.active) {
          sel = nd.id;
          break;
        }
    }
    if (sel < 0) throw std::logic_error("feasibility_search: no active node");

    const Eigen::VectorXd x_rand = uniform_sample(
        state_at(ts, w, tree[sel].k).mean_polytope, sys.workspace_bounds, rng);
    const int near_id = best_nearest(x_rand, tree, params.d_near);

    bool lp_failed = false;
    std::optional<TreeNode> v_new =
        propagate_impl(tree[near_id], ctx, rng, &lp_failed);
    if (lp_failed) ++res.stats.lp_failures;
    if (v_new) {
      std::optional<KLTrajectory> closed =
          try_close_loop(*v_new, tree, ts, w, f, sys, params);
      bool kept = false;
      if (closed) {
        ++res.stats.loops_closed;
        const double r = rho(*closed, f, 0);
        if (r >= 0.0) {
          kept = true;
          if (r > best_rho) {
            best_rho = r;
            best = std::move(closed);
          }
        }
      }
      if (!kept) {
        v_new->id = static_cast<int>(tree.size());
        if (!cone_contains(state_at(ts, w, v_new->k).cone, v_new->belief))
          throw std::logic_error("feasibility_search: node left its cone");
        tree.push_back(std::move(*v_new));
        drain(tree, tree.back(), params.d_drain);
        ++res.stats.nodes_inserted;
      }
    }
    if (trace) {
      int act = 0;
      for (const auto& nd : tree) act += nd.active ? 1 : 0;
      *trace << it << ',' << act << ',' << tree.size() << ',' << best_rho
             << '\n';
    }
  }
  res.stats.iterations = it;
  res.stats.best_rho = best_rho;
  res.stats.elapsed_s = elapsed();

  if (best) {
    if (!(rho(*best, f, 0) >= 0.0))
      throw std::logic_error(
          "feasibility_search: retained trajectory lost its robustness");
    res.status = FeasibilityStatus::Found;
    res.trajectory = std::move(*best);
    return res;
  }

  // longest witness prefix any node simulated
  int reach = 0;
  for (const auto& nd : tree)
    for (int k = 0; k <= K; ++k)
      if (w.states[k] == w.states[nd.k]) reach = std::max(reach, k);
  res.status = FeasibilityStatus::Infeasible;
  if (reach < K) {
    res.cex.states.assign(w.states.begin(), w.states.begin() + reach + 1);
    res.cex.actions.assign(w.modes.begin(), w.modes.begin() + reach);
    res.cex.loop.reset();
  } else {
    res.cex.states = w.states;
    res.cex.actions = w.modes;
    res.cex.loop = w.L;
  }
  return res;
}

} // namespace prstl
