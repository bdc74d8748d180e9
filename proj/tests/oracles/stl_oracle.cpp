#include "oracles/stl_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "oracles/quantile_oracle.hpp"

namespace prstl::oracle {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

long long window_hi(int k, int b, long long T) {
  if (b == kUnbounded) return T;
  long long hi = static_cast<long long>(k) + b;
  return hi < T ? hi : T;
}

double rho_pred_state(const ProbPredicate& p, const Eigen::VectorXd& x) {
  double v = p.h.dot(x) + p.c;
  return p.negated ? v : -v;
}

double rho_pred_belief(const ProbPredicate& p, const GaussianBelief& b) {
  double var = p.h.dot(b.cov * p.h);
  double sd = var > 0.0 ? std::sqrt(var) : 0.0;
  double base;
  if (p.eps == 0.0 && sd > 0.0) {
    base = -kInf;
  } else {
    double coeff = p.eps == 0.0 ? 0.0 : normal_quantile(1.0 - p.eps);
    base = -(p.h.dot(b.mean) + p.c) - coeff * sd;
  }
  return p.negated ? -base : base;
}

} // namespace

bool finite_trace_sat(const std::vector<Eigen::VectorXd>& xs,
                      const std::vector<int>& qs, const FormulaPtr& f, int k) {
  const long long T = static_cast<long long>(xs.size()) - 1;
  if (k < 0 || k > T)
    throw std::out_of_range("finite_trace_sat: instant outside the trace");
  switch (f->kind) {
    case Formula::Kind::Prob: {
      bool ok = f->pred.h.dot(xs[k]) + f->pred.c <= 0.0;
      return f->pred.negated ? !ok : ok;
    }
    case Formula::Kind::Mode:
      return k == 0 || f->modes.count(qs[k - 1]) > 0;
    case Formula::Kind::And:
      for (const auto& kid : f->kids)
        if (!finite_trace_sat(xs, qs, kid, k)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& kid : f->kids)
        if (finite_trace_sat(xs, qs, kid, k)) return true;
      return false;
    case Formula::Kind::Always:
      for (long long t = k + f->a; t <= window_hi(k, f->b, T); ++t)
        if (!finite_trace_sat(xs, qs, f->kids[0], static_cast<int>(t)))
          return false;
      return true;
    case Formula::Kind::Until:
      for (long long t = k + f->a; t <= window_hi(k, f->b, T); ++t) {
        if (!finite_trace_sat(xs, qs, f->kids[1], static_cast<int>(t)))
          continue;
        bool left_all = true;
        for (long long s = k + f->a; s <= t && left_all; ++s)
          left_all = finite_trace_sat(xs, qs, f->kids[0], static_cast<int>(s));
        if (left_all) return true;
      }
      return false;
  }
  throw std::logic_error("finite_trace_sat: unknown kind");
}

double finite_trace_rho(const std::vector<Eigen::VectorXd>& xs,
                        const std::vector<int>& qs, const FormulaPtr& f,
                        int k) {
  const long long T = static_cast<long long>(xs.size()) - 1;
  if (k < 0 || k > T)
    throw std::out_of_range("finite_trace_rho: instant outside the trace");
  switch (f->kind) {
    case Formula::Kind::Prob:
      return rho_pred_state(f->pred, xs[k]);
    case Formula::Kind::Mode:
      return (k == 0 || f->modes.count(qs[k - 1]) > 0) ? kInf : -kInf;
    case Formula::Kind::And: {
      double v = kInf;
      for (const auto& kid : f->kids)
        v = std::min(v, finite_trace_rho(xs, qs, kid, k));
      return v;
    }
    case Formula::Kind::Or: {
      double v = -kInf;
      for (const auto& kid : f->kids)
        v = std::max(v, finite_trace_rho(xs, qs, kid, k));
      return v;
    }
    case Formula::Kind::Always: {
      double v = kInf;
      for (long long t = k + f->a; t <= window_hi(k, f->b, T); ++t)
        v = std::min(v, finite_trace_rho(xs, qs, f->kids[0],
                                         static_cast<int>(t)));
      return v;
    }
    case Formula::Kind::Until: {
      double best = -kInf;
      for (long long t = k + f->a; t <= window_hi(k, f->b, T); ++t) {
        double left_min = kInf;
        for (long long s = k; s <= t; ++s)
          left_min = std::min(
              left_min, finite_trace_rho(xs, qs, f->kids[0],
                                         static_cast<int>(s)));
        double cand = std::min(
            finite_trace_rho(xs, qs, f->kids[1], static_cast<int>(t)),
            left_min);
        best = std::max(best, cand);
      }
      return best;
    }
  }
  throw std::logic_error("finite_trace_rho: unknown kind");
}

double finite_belief_rho(const std::vector<GaussianBelief>& bs,
                         const std::vector<int>& qs, const FormulaPtr& f,
                         int k) {
  const long long T = static_cast<long long>(bs.size()) - 1;
  if (k < 0 || k > T)
    throw std::out_of_range("finite_belief_rho: instant outside the sequence");
  switch (f->kind) {
    case Formula::Kind::Prob:
      return rho_pred_belief(f->pred, bs[k]);
    case Formula::Kind::Mode:
      return (k == 0 || f->modes.count(qs[k - 1]) > 0) ? kInf : -kInf;
    case Formula::Kind::And: {
      double v = kInf;
      for (const auto& kid : f->kids)
        v = std::min(v, finite_belief_rho(bs, qs, kid, k));
      return v;
    }
    case Formula::Kind::Or: {
      double v = -kInf;
      for (const auto& kid : f->kids)
        v = std::max(v, finite_belief_rho(bs, qs, kid, k));
      return v;
    }
    case Formula::Kind::Always: {
      if (f->b == kUnbounded || k + static_cast<long long>(f->b) > T)
        throw std::invalid_argument(
            "finite_belief_rho: window does not close inside the sequence");
      double v = kInf;
      for (int t = k + f->a; t <= k + f->b; ++t)
        v = std::min(v, finite_belief_rho(bs, qs, f->kids[0], t));
      return v;
    }
    case Formula::Kind::Until: {
      if (f->b == kUnbounded || k + static_cast<long long>(f->b) > T)
        throw std::invalid_argument(
            "finite_belief_rho: window does not close inside the sequence");
      double best = -kInf;
      for (int t = k + f->a; t <= k + f->b; ++t) {
        double left_min = kInf;
        for (int s = k; s <= t; ++s)
          left_min = std::min(left_min,
                              finite_belief_rho(bs, qs, f->kids[0], s));
        best = std::max(
            best, std::min(finite_belief_rho(bs, qs, f->kids[1], t),
                           left_min));
      }
      return best;
    }
  }
  throw std::logic_error("finite_belief_rho: unknown kind");
}

std::pair<std::vector<GaussianBelief>, std::vector<int>> unroll_lasso(
    const KLTrajectory& t, const SwitchedSystem& sys, int len) {
  if (len < t.K + 1)
    throw std::invalid_argument("unroll_lasso: shorter than the lasso itself");
  const int K = t.K;
  const int L = t.L;
  const int P = t.period();
  auto mean_at = [&](int pos) {
    return t.beliefs[pos <= K ? pos : L + (pos - L) % P].mean;
  };
  auto action_at = [&](int pos) -> const KLAction& {
    return t.actions[pos < K ? pos : (L - 1) + (pos - (L - 1)) % P];
  };

  std::vector<GaussianBelief> bs;
  std::vector<int> qs;
  bs.reserve(len);
  Eigen::MatrixXd cov = t.beliefs[0].cov;
  for (int pos = 0; pos < len; ++pos) {
    bs.emplace_back(mean_at(pos), cov);
    if (pos + 1 == len) break;
    const KLAction& a = action_at(pos);
    qs.push_back(a.q);
    const Mode& md = sys.mode(a.q);
    Eigen::MatrixXd sp = md.A * cov * md.A.transpose() +
                         md.W * md.W.transpose();
    Eigen::VectorXd xe = sys.noise_at == NoiseAt::Predicted
                             ? Eigen::VectorXd(md.A * mean_at(pos) + md.B * a.u)
                             : mean_at(pos);
    Eigen::MatrixXd vv =
        Eigen::MatrixXd::Zero(md.C.rows(), md.C.rows());
    for (int i = 0; i < md.C.rows(); ++i) {
      double nv = eval_noise(md.noise[i], xe);
      vv(i, i) = nv * nv;
    }
    Eigen::MatrixXd s = md.C * sp * md.C.transpose() + vv;
    Eigen::MatrixXd gain = sp * md.C.transpose() * s.inverse();
    Eigen::MatrixXd next = sp - gain * md.C * sp;
    cov = 0.5 * (next + next.transpose());
  }
  return {std::move(bs), std::move(qs)};
}

bool lasso_word_sat(const std::vector<std::set<int>>& labels,
                    const std::vector<int>& modes, int L, const LtlPtr& f,
                    int pos) {
  const int K = static_cast<int>(labels.size()) - 1;
  const int P = K + 1 - L;
  pos = pos <= K ? pos : L + (pos - L) % P;
  switch (f->kind) {
    case LtlFormula::Kind::Prob:
      return labels[pos].count(f->pred.id) > 0;
    case LtlFormula::Kind::Mode:
      return pos == 0 || f->modes.count(modes[pos - 1]) > 0;
    case LtlFormula::Kind::And:
      for (const auto& kid : f->kids)
        if (!lasso_word_sat(labels, modes, L, kid, pos)) return false;
      return true;
    case LtlFormula::Kind::Or:
      for (const auto& kid : f->kids)
        if (lasso_word_sat(labels, modes, L, kid, pos)) return true;
      return false;
    case LtlFormula::Kind::Always:
      // One full revolution past the end covers every reachable position.
      for (int t = pos; t <= K + P; ++t)
        if (!lasso_word_sat(labels, modes, L, f->kids[0], t)) return false;
      return true;
    case LtlFormula::Kind::Eventually:
      for (int t = pos; t <= K + P; ++t)
        if (lasso_word_sat(labels, modes, L, f->kids[0], t)) return true;
      return false;
    case LtlFormula::Kind::Until:
      // A witness, when one exists, occurs within one revolution past K.
      for (int t = pos; t <= K + P; ++t) {
        if (!lasso_word_sat(labels, modes, L, f->kids[1], t)) continue;
        bool left_all = true;
        for (int s = pos; s < t && left_all; ++s)
          left_all = lasso_word_sat(labels, modes, L, f->kids[0], s);
        if (left_all) return true;
      }
      return false;
  }
  throw std::logic_error("lasso_word_sat: unknown kind");
}

} // namespace prstl::oracle
