#include "prstl/bmc.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace prstl {

int fair_step(const FairTS& cex, int tracker, int s, int q, int s2) {
  const int end = cex.end();
  if (tracker < 0 || tracker > cex.acc())
    throw std::invalid_argument("fair_step: tracker out of range");
  if (tracker == cex.acc()) return tracker;
  if (tracker == end) {
    if (!cex.loop) return end; // prefix flavor: nothing escapes
    int L = *cex.loop;
    if (s == cex.states[end] && q == cex.actions[L - 1] && s2 == cex.states[L])
      return L;
    if (s == cex.states[end] && q == cex.actions[end - 1] && s2 == cex.states[end])
      return end;
    return cex.acc();
  }
  int k = tracker;
  int q_prev = cex.actions[k == 0 ? 0 : k - 1];
  if (s == cex.states[k] && q == cex.actions[k] && s2 == cex.states[k + 1])
    return k + 1;
  if (s == cex.states[k] && q == q_prev && s2 == cex.states[k]) return k;
  if (k > 0 && s == cex.states[k] && q == q_prev && s2 == cex.states[k - 1])
    return k - 1;
  return cex.acc();
}

namespace {

// Modes entering each position; index 0 is unused (vacuously true there).
bool mode_atom_holds(const std::vector<int>& modes, const std::set<int>& Q,
                     int k) {
  if (k == 0) return true;
  return Q.count(modes[k - 1]) > 0;
}

std::vector<bool> eval_ltl(const std::vector<std::set<int>>& labels,
                           const std::vector<int>& modes, int L,
                           const LtlPtr& f) {
  const int n = static_cast<int>(labels.size()); // K+1 positions
  auto succ = [&](int k) { return k == n - 1 ? L : k + 1; };
  std::vector<bool> out(n);
  switch (f->kind) {
    case LtlFormula::Kind::Prob:
      for (int k = 0; k < n; ++k) out[k] = labels[k].count(f->pred.id) > 0;
      return out;
    case LtlFormula::Kind::Mode:
      for (int k = 0; k < n; ++k) out[k] = mode_atom_holds(modes, f->modes, k);
      return out;
    case LtlFormula::Kind::And: {
      out.assign(n, true);
      for (const auto& kid : f->kids) {
        auto v = eval_ltl(labels, modes, L, kid);
        for (int k = 0; k < n; ++k) out[k] = out[k] && v[k];
      }
      return out;
    }
    case LtlFormula::Kind::Or: {
      out.assign(n, false);
      for (const auto& kid : f->kids) {
        auto v = eval_ltl(labels, modes, L, kid);
        for (int k = 0; k < n; ++k) out[k] = out[k] || v[k];
      }
      return out;
    }
    case LtlFormula::Kind::Until: {
      auto v1 = eval_ltl(labels, modes, L, f->kids[0]);
      auto v2 = eval_ltl(labels, modes, L, f->kids[1]);
      out.assign(n, false); // least fixpoint
      for (int sweep = 0; sweep <= n + 1; ++sweep) {
        bool changed = false;
        for (int k = n - 1; k >= 0; --k) {
          bool next = v2[k] || (v1[k] && out[succ(k)]);
          if (next != out[k]) { out[k] = next; changed = true; }
        }
        if (!changed) break;
      }
      return out;
    }
    case LtlFormula::Kind::Eventually: {
      auto v = eval_ltl(labels, modes, L, f->kids[0]);
      out.assign(n, false);
      for (int sweep = 0; sweep <= n + 1; ++sweep) {
        bool changed = false;
        for (int k = n - 1; k >= 0; --k) {
          bool next = v[k] || out[succ(k)];
          if (next != out[k]) { out[k] = next; changed = true; }
        }
        if (!changed) break;
      }
      return out;
    }
    case LtlFormula::Kind::Always: {
      auto v = eval_ltl(labels, modes, L, f->kids[0]);
      out.assign(n, true); // greatest fixpoint
      for (int sweep = 0; sweep <= n + 1; ++sweep) {
        bool changed = false;
        for (int k = n - 1; k >= 0; --k) {
          bool next = v[k] && out[succ(k)];
          if (next != out[k]) { out[k] = next; changed = true; }
        }
        if (!changed) break;
      }
      return out;
    }
  }
  throw std::logic_error("eval_ltl: bad node");
}

struct ProductState {
  int abs;
  std::vector<int> trackers;

  bool operator==(const ProductState& o) const {
    return abs == o.abs && trackers == o.trackers;
  }
  bool operator<(const ProductState& o) const {
    if (abs != o.abs) return abs < o.abs;
    return trackers < o.trackers;
  }
};

class Search {
 public:
  Search(const AbstractionTS& abs, const LtlPtr& f,
         const std::vector<FairTS>& cexs, int K)
      : abs_(abs), f_(f), cexs_(cexs), K_(K) {}

  BmcResult run() {
    ProductState init;
    init.abs = abs_.initial;
    init.trackers.assign(cexs_.size(), 0);
    path_.push_back(init);
    BmcResult res;
    if (dfs(res)) return res;
    res.status = simple_depth_reached_ ? BmcStatus::NoWitnessAtBound
                                       : BmcStatus::Exhausted;
    return res;
  }

 private:
  const AbstractionTS& abs_;
  const LtlPtr& f_;
  const std::vector<FairTS>& cexs_;
  const int K_;
  std::vector<ProductState> path_;
  std::vector<int> mode_path_;
  bool simple_depth_reached_ = false;

  bool path_simple() const {
    for (size_t i = 0; i < path_.size(); ++i)
      for (size_t j = i + 1; j < path_.size(); ++j)
        if (path_[i] == path_[j]) return false;
    return true;
  }

  bool fair_on_lasso(const FairTS& cex, size_t idx, int L) const {
    int t = path_[K_].trackers[idx];
    if (t == cex.acc()) return true;
    std::set<int> seen;
    while (!seen.count(t)) {
      if (t == cex.acc()) return true;
      seen.insert(t);
      t = fair_step(cex, t, path_[K_].abs, mode_path_[L - 1], path_[L].abs);
      for (int j = L; j < K_; ++j)
        t = fair_step(cex, t, path_[j].abs, mode_path_[j], path_[j + 1].abs);
    }
    return t == cex.acc();
  }

  bool try_lassos(BmcResult& res) {
    if (path_simple()) simple_depth_reached_ = true;
    std::vector<std::set<int>> labels;
    labels.reserve(K_ + 1);
    for (const auto& ps : path_) labels.push_back(abs_.label_of(ps.abs));
    for (int L = 1; L <= K_; ++L) {
      if (path_[K_].abs != path_[L - 1].abs) continue;
      if (!lasso_ltl_sat(labels, mode_path_, L, f_)) continue;
      bool fair = true;
      for (size_t i = 0; i < cexs_.size(); ++i) {
        if (!fair_on_lasso(cexs_[i], i, L)) { fair = false; break; }
      }
      if (!fair) continue;
      res.status = BmcStatus::Sat;
      res.witness.states.clear();
      for (const auto& ps : path_) res.witness.states.push_back(ps.abs);
      res.witness.modes = mode_path_;
      res.witness.L = L;
      self_check(res.witness);
      return true;
    }
    return false;
  }

  bool dfs(BmcResult& res) {
    if (static_cast<int>(path_.size()) == K_ + 1) return try_lassos(res);
    const ProductState& cur = path_.back();
    for (const auto& [q, to] : abs_.successors(cur.abs)) {
      ProductState next;
      next.abs = to;
      next.trackers.reserve(cexs_.size());
      for (size_t i = 0; i < cexs_.size(); ++i)
        next.trackers.push_back(
            fair_step(cexs_[i], cur.trackers[i], cur.abs, q, to));
      path_.push_back(std::move(next));
      mode_path_.push_back(q);
      bool found = dfs(res);
      mode_path_.pop_back();
      path_.pop_back();
      if (found) return true;
    }
    return false;
  }

  void self_check(const LassoWitness& w) const {
    for (int j = 0; j < K_; ++j)
      if (!abs_.has_transition(w.states[j], w.modes[j], w.states[j + 1]))
        throw std::logic_error("bmc_search: witness uses a missing transition");
    if (w.states[K_] != w.states[w.L - 1])
      throw std::logic_error("bmc_search: witness loop does not close");
    std::vector<std::set<int>> labels;
    for (int s : w.states) labels.push_back(abs_.label_of(s));
    if (!lasso_ltl_sat(labels, w.modes, w.L, f_))
      throw std::logic_error("bmc_search: witness fails its own formula");
  }
};

} // namespace

bool lasso_ltl_sat(const std::vector<std::set<int>>& labels,
                   const std::vector<int>& modes, int L, const LtlPtr& f) {
  if (labels.size() != modes.size() + 1)
    throw std::invalid_argument("lasso_ltl_sat: labels/modes length mismatch");
  if (L < 1 || L > static_cast<int>(modes.size()))
    throw std::invalid_argument("lasso_ltl_sat: loop out of range");
  return eval_ltl(labels, modes, L, f)[0];
}

BmcResult bmc_search(const AbstractionTS& abs, const LtlPtr& f,
                     const std::vector<FairTS>& cexs, int K) {
  if (K < 1) throw std::invalid_argument("bmc_search: K must be >= 1");
  return Search(abs, f, cexs, K).run();
}

} // namespace prstl
