#include "prstl/trajectory.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "prstl/gauss.hpp"
#include "prstl/kalman.hpp"

namespace prstl {

namespace {

constexpr double kSatTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sqrt_var(const Eigen::VectorXd& h, const Eigen::MatrixXd& cov) {
  double var = h.dot(cov * h);
  return std::sqrt(var < 0.0 ? 0.0 : var);
}

void check_shape(const KLTrajectory& t) {
  if (t.K < 1 || t.L < 1 || t.L > t.K)
    throw std::invalid_argument("KLTrajectory: need 1 <= L <= K");
  if (static_cast<int>(t.beliefs.size()) != t.K + 1)
    throw std::invalid_argument("KLTrajectory: belief count != K+1");
  if (static_cast<int>(t.actions.size()) != t.K)
    throw std::invalid_argument("KLTrajectory: action count != K");
}

// Lazily extends the trajectory by replaying the loop actions; shared by
// every unroll branch so covariances along repeats are computed once.
class LassoEval {
 public:
  LassoEval(const KLTrajectory& t) : t_(t), ext_(t.beliefs) {}

  double rho(const FormulaPtr& f, int k, int K_eff);
  bool sat(const FormulaPtr& f, int k, int K_eff);

 private:
  const KLTrajectory& t_;
  std::vector<GaussianBelief> ext_;
  std::map<std::tuple<const Formula*, int, int>, double> rho_memo_;
  std::map<std::tuple<const Formula*, int, int>, bool> sat_memo_;

  // Template position of extended instant j (means repeat verbatim).
  int tpl(int j) const {
    if (j <= t_.K) return j;
    return t_.L - 1 + (j - (t_.L - 1)) % t_.period();
  }

  // Action applied at extended instant j; the loop replays L−1..K−1.
  const KLAction& action_at(int j) const {
    return t_.actions[j < t_.K
                          ? j
                          : t_.L - 1 + (j - (t_.L - 1)) % t_.period()];
  }

  void ensure(int upto) {
    while (static_cast<int>(ext_.size()) <= upto) {
      int j = static_cast<int>(ext_.size()) - 1; // last known instant
      if (!t_.sys)
        throw std::logic_error("KLTrajectory: unrolling requires a system");
      const KLAction& act = action_at(j);
      GaussianBelief next = mlo_step(ext_[j], act.q, act.u, *t_.sys);
      const Eigen::VectorXd& want = t_.beliefs[tpl(j + 1)].mean;
      if ((next.mean - want).cwiseAbs().maxCoeff() > t_.eps_loop)
        throw std::runtime_error(
            "KLTrajectory: loop replay drifted off the recorded means");
      next.mean = want;
      ext_.push_back(std::move(next));
    }
  }

  const GaussianBelief& belief(int k) {
    ensure(k);
    return ext_[k];
  }

  bool mode_holds(int k, const std::set<int>& modes) {
    if (k == 0) return true;
    return modes.count(action_at(k - 1).q) > 0;
  }

  // Window [k+a, min(k+b, K_eff)], guarding b = ∞.
  std::pair<int, int> window(const FormulaPtr& f, int k, int K_eff) const {
    int lo = k + f->a;
    int hi = f->b == kUnbounded ? K_eff
                                : std::min(k + f->b, K_eff);
    return {lo, hi};
  }

  int loop_of(int K_eff) const { return K_eff + 1 - t_.period(); }
};

double LassoEval::rho(const FormulaPtr& f, int k, int K_eff) {
  auto key = std::make_tuple(f.get(), k, K_eff);
  auto it = rho_memo_.find(key);
  if (it != rho_memo_.end()) return it->second;

  double out;
  switch (f->kind) {
    case Formula::Kind::Prob:
      out = pred_margin(f->pred, belief(k));
      break;
    case Formula::Kind::Mode:
      out = mode_holds(k, f->modes) ? kInf : -kInf;
      break;
    case Formula::Kind::And: {
      out = kInf;
      for (const auto& kid : f->kids) out = std::min(out, rho(kid, k, K_eff));
      break;
    }
    case Formula::Kind::Or: {
      out = -kInf;
      for (const auto& kid : f->kids) out = std::max(out, rho(kid, k, K_eff));
      break;
    }
    case Formula::Kind::Until: {
      int L_eff = loop_of(K_eff);
      if (k + f->a <= L_eff) {
        auto [lo, hi] = window(f, k, K_eff);
        out = -kInf;
        double left_min = kInf;
        for (int kk = k; kk < lo; ++kk)
          left_min = std::min(left_min, rho(f->kids[0], kk, K_eff));
        for (int kp = lo; kp <= hi; ++kp) {
          left_min = std::min(left_min, rho(f->kids[0], kp, K_eff));
          out = std::max(out, std::min(rho(f->kids[1], kp, K_eff), left_min));
        }
      } else {
        int n = n_unroll(k + f->a, K_eff, L_eff);
        out = rho(f, k, K_eff + n * t_.period());
      }
      break;
    }
    case Formula::Kind::Always: {
      int L_eff = loop_of(K_eff);
      if (k + f->a <= L_eff) {
        auto [lo, hi] = window(f, k, K_eff);
        out = kInf;
        for (int kp = lo; kp <= hi; ++kp)
          out = std::min(out, rho(f->kids[0], kp, K_eff));
      } else {
        int n = n_unroll(k + f->a, K_eff, L_eff);
        out = rho(f, k, K_eff + n * t_.period());
      }
      break;
    }
    default:
      throw std::logic_error("rho: bad node");
  }
  rho_memo_[key] = out;
  return out;
}

bool LassoEval::sat(const FormulaPtr& f, int k, int K_eff) {
  auto key = std::make_tuple(f.get(), k, K_eff);
  auto it = sat_memo_.find(key);
  if (it != sat_memo_.end()) return it->second;

  bool out;
  switch (f->kind) {
    case Formula::Kind::Prob:
      out = pred_margin(f->pred, belief(k)) >= -kSatTol;
      break;
    case Formula::Kind::Mode:
      out = mode_holds(k, f->modes);
      break;
    case Formula::Kind::And: {
      out = true;
      for (const auto& kid : f->kids)
        if (!sat(kid, k, K_eff)) { out = false; break; }
      break;
    }
    case Formula::Kind::Or: {
      out = false;
      for (const auto& kid : f->kids)
        if (sat(kid, k, K_eff)) { out = true; break; }
      break;
    }
    case Formula::Kind::Until: {
      int L_eff = loop_of(K_eff);
      if (k + f->a <= L_eff) {
        auto [lo, hi] = window(f, k, K_eff);
        out = false;
        bool left_ok = true;
        for (int kp = lo; kp <= hi && left_ok; ++kp) {
          if (!sat(f->kids[0], kp, K_eff)) left_ok = false;
          if (left_ok && sat(f->kids[1], kp, K_eff)) { out = true; break; }
        }
      } else {
        int n = n_unroll(k + f->a, K_eff, L_eff);
        out = sat(f, k, K_eff + n * t_.period());
      }
      break;
    }
    case Formula::Kind::Always: {
      int L_eff = loop_of(K_eff);
      if (k + f->a <= L_eff) {
        auto [lo, hi] = window(f, k, K_eff);
        out = true;
        for (int kp = lo; kp <= hi; ++kp)
          if (!sat(f->kids[0], kp, K_eff)) { out = false; break; }
      } else {
        int n = n_unroll(k + f->a, K_eff, L_eff);
        out = sat(f, k, K_eff + n * t_.period());
      }
      break;
    }
    default:
      throw std::logic_error("sat_bool: bad node");
  }
  sat_memo_[key] = out;
  return out;
}

} // namespace

double pred_margin(const ProbPredicate& p, const GaussianBelief& b) {
  ConeConstraint cc{p.h, p.c, p.eps};
  double margin = -p.h.dot(b.mean) - p.c - cone_term(cc, b.cov);
  return p.negated ? -margin : margin;
}

void validate_kl(const KLTrajectory& t, const FormulaPtr& formula) {
  check_shape(t);
  const GaussianBelief& at_loop = t.beliefs[t.L - 1];
  const GaussianBelief& at_end = t.beliefs[t.K];
  if ((at_end.mean - at_loop.mean).cwiseAbs().maxCoeff() > t.eps_loop)
    throw std::runtime_error("KLTrajectory: loop means do not close");
  for (const auto& p : collect_predicates(formula)) {
    if (pred_margin(p, at_loop) < -kSatTol) continue;
    if (sqrt_var(p.h, at_end.cov) > sqrt_var(p.h, at_loop.cov) + t.eps_loop)
      throw std::runtime_error(
          "KLTrajectory: covariance grows along a satisfied predicate");
  }
}

KLTrajectory unroll(int N, const KLTrajectory& t, const SwitchedSystem& sys) {
  check_shape(t);
  if (N < 0) throw std::invalid_argument("unroll: negative count");
  if (N == 0) return t;
  const int np = t.period();
  KLTrajectory grown = t;
  grown.sys = &sys;
  for (int rep = 0; rep < N; ++rep)
    for (int j = t.L - 1; j < t.K; ++j) grown.actions.push_back(t.actions[j]);
  grown.K = t.K + N * np;
  grown.L = t.L + N * np;
  grown.beliefs.reserve(grown.K + 1);
  for (int j = t.K; j < grown.K; ++j) {
    const KLAction& act = grown.actions[j];
    GaussianBelief next = mlo_step(grown.beliefs[j], act.q, act.u, sys);
    int tpl = t.L - 1 + (j + 1 - (t.L - 1)) % np;
    const Eigen::VectorXd& want = t.beliefs[tpl].mean;
    if ((next.mean - want).cwiseAbs().maxCoeff() > t.eps_loop)
      throw std::runtime_error(
          "unroll: loop replay drifted off the recorded means");
    next.mean = want;
    grown.beliefs.push_back(std::move(next));
  }
  return grown;
}

bool sat_bool(const KLTrajectory& t, const FormulaPtr& f, int k) {
  check_shape(t);
  LassoEval ev(t);
  return ev.sat(f, k, t.K);
}

double rho(const KLTrajectory& t, const FormulaPtr& f, int k) {
  check_shape(t);
  LassoEval ev(t);
  return ev.rho(f, k, t.K);
}

} // namespace prstl
