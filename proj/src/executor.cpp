#include "prstl/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "prstl/gauss.hpp"
#include "prstl/kalman.hpp"

namespace prstl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scales the feedback correction until u0 + α·corr lies in 𝒰. The planned
// input itself is kept untouched.
Eigen::VectorXd clamp_correction(const Eigen::VectorXd& u0,
                                 const Eigen::VectorXd& corr,
                                 const Polytope& poly) {
  double alpha = 1.0;
  for (const Halfspace& hs : poly.halfspaces) {
    const double base = hs.h.dot(u0) + hs.c;
    const double along = hs.h.dot(corr);
    if (along <= 0.0 || base + along <= 0.0) continue;
    alpha = std::min(alpha, std::max(0.0, -base / along));
  }
  Eigen::VectorXd u = u0;
  if (alpha > 0.0) u += alpha * (1.0 - 1e-12) * corr;
  if (!poly.contains(u, 1e-9))
    throw std::runtime_error("execute: input left the polytope after clamping");
  return u;
}

// Loop-template index for instants past the recorded horizon: the lasso
// replays positions L−1..K−1.
int wrap_index(const KLTrajectory& plan, int k) {
  return k < plan.K ? k
                    : plan.L - 1 + (k - (plan.L - 1)) % plan.period();
}

int last_instant(const std::vector<Eigen::VectorXd>& xs) {
  if (xs.empty()) throw std::invalid_argument("trace is empty");
  return static_cast<int>(xs.size()) - 1;
}

int window_end(int k, int b, int T) {
  if (b == kUnbounded) return T;
  const long long hi = static_cast<long long>(k) + b;
  return static_cast<int>(std::min<long long>(hi, T));
}

} // namespace

int execution_horizon(const KLTrajectory& plan, const FormulaPtr& f) {
  return formula_horizon(f) + plan.period();
}

ExecutionTrace execute(const KLTrajectory& plan, const SwitchedSystem& sys,
                       const LqrParams& lqr, int total_steps, Rng& rng) {
  if (plan.beliefs.empty() || plan.actions.empty())
    throw std::invalid_argument("execute: empty plan");
  if (total_steps < 0)
    throw std::invalid_argument("execute: negative step count");
  const GaussianBelief& b0 = plan.beliefs.front();
  if (b0.mean.size() != sys.n)
    throw std::invalid_argument("execute: plan dimension mismatch");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b0.cov);
  const Eigen::MatrixXd sqrt_cov =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::VectorXd z(sys.n);
  for (int i = 0; i < sys.n; ++i) z[i] = rng.normal();

  ExecutionTrace tr;
  tr.states.push_back(b0.mean + sqrt_cov * z);
  tr.observations.push_back(Eigen::VectorXd::Zero(sys.p));
  tr.estimates.push_back(b0);

  std::map<int, Eigen::MatrixXd> gain_cache;
  const auto gain_for = [&](int q) -> const Eigen::MatrixXd& {
    auto it = gain_cache.find(q);
    if (it == gain_cache.end()) {
      const Mode& md = sys.mode(q);
      it = gain_cache
               .emplace(q, lqr_gains(md.A, md.B, lqr.q_for(q), lqr.R,
                                     lqr.horizon)
                               .front())
               .first;
    }
    return it->second;
  };

  for (int k = 0; k < total_steps; ++k) {
    const KLAction& act = plan.actions[wrap_index(plan, k)];
    const Eigen::VectorXd& want =
        plan.beliefs[k <= plan.K ? k : wrap_index(plan, k)].mean;
    const GaussianBelief& est = tr.estimates.back();
    const Eigen::VectorXd corr = gain_for(act.q) * (want - est.mean);
    const Eigen::VectorXd u =
        clamp_correction(act.u, corr, sys.input_polytope);

    auto [x_next, y_next] = simulate_step(tr.states.back(), act.q, u, sys, rng);
    auto [b_next, aux] = kf_step(est, act.q, u, y_next, sys);
    (void)aux;

    tr.inputs.push_back(u);
    tr.modes.push_back(act.q);
    tr.states.push_back(std::move(x_next));
    tr.observations.push_back(std::move(y_next));
    tr.estimates.push_back(std::move(b_next));
  }
  return tr;
}

bool trace_sat(const std::vector<Eigen::VectorXd>& xs,
               const std::vector<int>& qs, const FormulaPtr& f, int k) {
  const int T = last_instant(xs);
  if (k < 0 || k > T) throw std::invalid_argument("trace_sat: k out of range");
  switch (f->kind) {
    case Formula::Kind::Prob: {
      const double v = f->pred.h.dot(xs[k]) + f->pred.c;
      return f->pred.negated ? v > 0.0 : v <= 0.0;
    }
    case Formula::Kind::Mode:
      return k == 0 || f->modes.count(qs[k - 1]) > 0;
    case Formula::Kind::And:
      for (const auto& kid : f->kids)
        if (!trace_sat(xs, qs, kid, k)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& kid : f->kids)
        if (trace_sat(xs, qs, kid, k)) return true;
      return false;
    case Formula::Kind::Always: {
      const int hi = window_end(k, f->b, T);
      for (int j = k + f->a; j <= hi; ++j)
        if (!trace_sat(xs, qs, f->kids[0], j)) return false;
      return true;
    }
    case Formula::Kind::Until: {
      const int hi = window_end(k, f->b, T);
      bool left_ok = true;
      for (int j = k + f->a; j <= hi; ++j) {
        left_ok = left_ok && trace_sat(xs, qs, f->kids[0], j);
        if (!left_ok) return false;
        if (trace_sat(xs, qs, f->kids[1], j)) return true;
      }
      return false;
    }
  }
  throw std::logic_error("trace_sat: unknown formula kind");
}

double trace_rho(const std::vector<Eigen::VectorXd>& xs,
                 const std::vector<int>& qs, const FormulaPtr& f, int k) {
  const int T = last_instant(xs);
  if (k < 0 || k > T) throw std::invalid_argument("trace_rho: k out of range");
  switch (f->kind) {
    case Formula::Kind::Prob: {
      const double v = f->pred.h.dot(xs[k]) + f->pred.c;
      return f->pred.negated ? v : -v;
    }
    case Formula::Kind::Mode:
      return (k == 0 || f->modes.count(qs[k - 1]) > 0) ? kInf : -kInf;
    case Formula::Kind::And: {
      double r = kInf;
      for (const auto& kid : f->kids)
        r = std::min(r, trace_rho(xs, qs, kid, k));
      return r;
    }
    case Formula::Kind::Or: {
      double r = -kInf;
      for (const auto& kid : f->kids)
        r = std::max(r, trace_rho(xs, qs, kid, k));
      return r;
    }
    case Formula::Kind::Always: {
      const int hi = window_end(k, f->b, T);
      double r = kInf;
      for (int j = k + f->a; j <= hi; ++j)
        r = std::min(r, trace_rho(xs, qs, f->kids[0], j));
      return r;
    }
    case Formula::Kind::Until: {
      const int hi = window_end(k, f->b, T);
      double left_min = kInf;
      for (int j = k; j < k + f->a && j <= T; ++j)
        left_min = std::min(left_min, trace_rho(xs, qs, f->kids[0], j));
      double best = -kInf;
      for (int j = k + f->a; j <= hi; ++j) {
        left_min = std::min(left_min, trace_rho(xs, qs, f->kids[0], j));
        best = std::max(best, std::min(trace_rho(xs, qs, f->kids[1], j),
                                       left_min));
      }
      return best;
    }
  }
  throw std::logic_error("trace_rho: unknown formula kind");
}

namespace {

// Probability that the estimated belief meets one stripped predicate.
double predicate_prob(const ProbPredicate& pr, const GaussianBelief& b) {
  const double v = pr.h.dot(b.mean) + pr.c;
  const double var = std::max(pr.h.dot(b.cov * pr.h), 0.0);
  const double sd = std::sqrt(var);
  if (sd == 0.0) return (pr.negated ? v > 0.0 : v <= 0.0) ? 1.0 : 0.0;
  const double p = gauss_cdf(-v / sd);
  return pr.negated ? 1.0 - p : p;
}

RunResult run_once(const KLTrajectory& plan, const SwitchedSystem& sys,
                   const LqrParams& lqr, const FormulaPtr& f, int total,
                   const KLTrajectory& extended,
                   const std::vector<ProbPredicate>& preds,
                   std::uint64_t run_seed) {
  Rng rng(run_seed);
  ExecutionTrace tr = execute(plan, sys, lqr, total, rng);

  RunResult r;
  r.success = trace_sat(tr.states, tr.modes, f, 0);
  r.rho = trace_rho(tr.states, tr.modes, f, 0);
  r.final_state = tr.states.back();
  double prod = 1.0;
  for (int k = 0; k <= total; ++k) {
    for (const ProbPredicate& pr : preds) {
      if (pred_margin(pr, extended.beliefs[k]) < 0.0) continue;
      prod *= predicate_prob(pr, tr.estimates[k]);
    }
  }
  r.instant_product = prod;
  return r;
}

MonteCarloStats run_batch(const KLTrajectory& plan, const SwitchedSystem& sys,
                          const LqrParams& lqr, const FormulaPtr& f, int runs,
                          std::uint64_t seed, bool parallel) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: runs must be >= 1");
  const int total = execution_horizon(plan, f);
  const KLTrajectory extended =
      total > plan.K ? unroll(n_unroll(total, plan.K, plan.L), plan, sys)
                     : plan;
  const std::vector<ProbPredicate> preds = collect_predicates(f);

#ifndef PRSTL_HAVE_OPENMP
  parallel = false;
#endif
  std::vector<RunResult> results(runs);
  if (parallel) {
#ifdef PRSTL_HAVE_OPENMP
    std::atomic<bool> failed{false};
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < runs; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        results[i] = run_once(plan, sys, lqr, f, total, extended, preds,
                              seed ^ static_cast<std::uint64_t>(i));
      } catch (...) {
#pragma omp critical(prstl_mc_error)
        {
          if (!err) err = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
    if (err) std::rethrow_exception(err);
#endif
  } else {
    for (int i = 0; i < runs; ++i)
      results[i] = run_once(plan, sys, lqr, f, total, extended, preds,
                            seed ^ static_cast<std::uint64_t>(i));
  }

  MonteCarloStats st;
  st.runs = runs;
  double sum_rho = 0.0, sum_prod = 0.0;
  for (const RunResult& r : results) {
    st.successes += r.success ? 1 : 0;
    sum_rho += r.rho;
    sum_prod += r.instant_product;
  }
  st.rate = static_cast<double>(st.successes) / runs;
  st.mean_rho = sum_rho / runs;
  st.mean_instant_product = sum_prod / runs;
  st.results = std::move(results);
  return st;
}

} // namespace

MonteCarloStats monte_carlo(const KLTrajectory& plan,
                            const SwitchedSystem& sys, const LqrParams& lqr,
                            const FormulaPtr& f, int runs,
                            std::uint64_t seed) {
  return run_batch(plan, sys, lqr, f, runs, seed, true);
}

MonteCarloStats monte_carlo_serial(const KLTrajectory& plan,
                                   const SwitchedSystem& sys,
                                   const LqrParams& lqr, const FormulaPtr& f,
                                   int runs, std::uint64_t seed) {
  return run_batch(plan, sys, lqr, f, runs, seed, false);
}

} // namespace prstl
