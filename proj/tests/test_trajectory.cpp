#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles/generators.hpp"
#include "oracles/quantile_oracle.hpp"
#include "oracles/stl_oracle.hpp"
#include "prstl/formula.hpp"
#include "prstl/kalman.hpp"
#include "prstl/trajectory.hpp"

using namespace prstl;

namespace {

Polytope box1(double radius) {
  Polytope p;
  Eigen::VectorXd h(1);
  h << 1.0;
  p.halfspaces.push_back({h, -radius});
  p.halfspaces.push_back({-h, -radius});
  return p;
}

// x' = x + u with unit-noise full observation: the posterior variance
// contracts as s/(s+1), so every lasso over it closes.
SwitchedSystem integrator1d() {
  Mode md;
  md.id = 1;
  md.A = Eigen::MatrixXd::Identity(1, 1);
  md.B = Eigen::MatrixXd::Identity(1, 1);
  md.W = Eigen::MatrixXd::Zero(1, 1);
  md.C = Eigen::MatrixXd::Identity(1, 1);
  md.noise.push_back(NoiseExpr::parse("1", 1));
  SwitchedSystem sys;
  sys.n = sys.m = sys.p = 1;
  sys.modes = {std::move(md)};
  sys.input_polytope = box1(5.0);
  sys.workspace_bounds = box1(100.0);
  return sys;
}

// stationary lasso at the origin: K steps, loop at L, all inputs zero
KLTrajectory stationary(const SwitchedSystem& sys, int K, int L) {
  KLTrajectory t;
  t.K = K;
  t.L = L;
  t.sys = &sys;
  t.beliefs.push_back(GaussianBelief(Eigen::VectorXd::Zero(1),
                                     Eigen::MatrixXd::Identity(1, 1)));
  for (int k = 0; k < K; ++k) {
    t.actions.push_back({1, Eigen::VectorXd::Zero(1)});
    t.beliefs.push_back(mlo_step(t.beliefs.back(), 1, t.actions.back().u, sys));
  }
  return t;
}

FormulaPtr atom(const char* text) { return parse_formula(text, 1, {1}); }

} // namespace

TEST_CASE("pred_margin") {
  ProbPredicate p;
  p.h = Eigen::VectorXd::Ones(1);
  p.c = -0.25; // x1 <= 0.25
  p.eps = 0.05;
  const GaussianBelief b(Eigen::VectorXd::Zero(1),
                         0.1 * Eigen::MatrixXd::Identity(1, 1));
  const double expect = 0.25 - oracle::normal_quantile(0.95) * std::sqrt(0.1);
  CHECK(pred_margin(p, b) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(std::fabs(pred_margin(p, b) - (-0.2701)) < 1e-4);

  ProbPredicate np = p;
  np.negated = true;
  CHECK(pred_margin(np, b) == doctest::Approx(-expect).epsilon(1e-10));

  ProbPredicate hard = p;
  hard.eps = 0.0;
  CHECK(pred_margin(hard, b) == -std::numeric_limits<double>::infinity());
  const GaussianBelief exact(Eigen::VectorXd::Zero(1),
                             Eigen::MatrixXd::Zero(1, 1));
  CHECK(pred_margin(hard, exact) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("validate_kl accepts a contracting stationary lasso") {
  const SwitchedSystem sys = integrator1d();
  const KLTrajectory t = stationary(sys, 2, 2);
  CHECK_NOTHROW(validate_kl(t, atom("P[0.1](x1 - 1 <= 0)")));
}

TEST_CASE("validate_kl shape errors") {
  const SwitchedSystem sys = integrator1d();
  const FormulaPtr f = atom("P[0.1](x1 - 1 <= 0)");
  KLTrajectory t = stationary(sys, 2, 2);
  {
    KLTrajectory bad = t;
    bad.L = 3;
    CHECK_THROWS_AS(validate_kl(bad, f), std::invalid_argument);
  }
  {
    KLTrajectory bad = t;
    bad.L = 0;
    CHECK_THROWS_AS(validate_kl(bad, f), std::invalid_argument);
  }
  {
    KLTrajectory bad = t;
    bad.beliefs.pop_back();
    CHECK_THROWS_AS(validate_kl(bad, f), std::invalid_argument);
  }
  {
    KLTrajectory bad = t;
    bad.actions.pop_back();
    CHECK_THROWS_AS(validate_kl(bad, f), std::invalid_argument);
  }
}

TEST_CASE("validate_kl semantic errors") {
  const SwitchedSystem sys = integrator1d();
  {
    KLTrajectory t = stationary(sys, 2, 2);
    t.beliefs[2].mean(0) = 0.5; // loop no longer closes
    CHECK_THROWS_AS(validate_kl(t, atom("P[0.1](x1 - 1 <= 0)")),
                    std::runtime_error);
  }
  {
    // covariance grows along the loop on a satisfied predicate
    KLTrajectory t = stationary(sys, 1, 1);
    t.beliefs[0] = GaussianBelief(Eigen::VectorXd::Zero(1),
                                  0.1 * Eigen::MatrixXd::Identity(1, 1));
    t.beliefs[1] = GaussianBelief(Eigen::VectorXd::Zero(1),
                                  0.2 * Eigen::MatrixXd::Identity(1, 1));
    CHECK_THROWS_AS(validate_kl(t, atom("P[0.1](x1 - 1 <= 0)")),
                    std::runtime_error);
    // an unsatisfied predicate is exempt from the growth rule
    CHECK_NOTHROW(validate_kl(t, atom("P[0.1](x1 + 5 <= 0)")));
  }
}

TEST_CASE("rho at atoms and inside-window operators is exact") {
  const SwitchedSystem sys = integrator1d();
  const KLTrajectory t = stationary(sys, 2, 2);

  const FormulaPtr p = atom("P[0.1](x1 - 1 <= 0)");
  for (int k = 0; k <= 2; ++k)
    CHECK(rho(t, p, k) ==
          doctest::Approx(pred_margin(p->pred, t.beliefs[k])).epsilon(1e-12));

  // min over the window picks the sloppiest instant (variance contracts)
  CHECK(rho(t, atom("G[0,2] P[0.1](x1 - 1 <= 0)"), 0) ==
        doctest::Approx(pred_margin(p->pred, t.beliefs[0])).epsilon(1e-12));
  CHECK(rho(t, atom("G[1,2] P[0.1](x1 - 1 <= 0)"), 0) ==
        doctest::Approx(pred_margin(p->pred, t.beliefs[1])).epsilon(1e-12));

  // eps = 0.5 kills the cone term, making margins exact
  CHECK(rho(t, atom("P[0.5](x1 - 100 <= 0) U[0,2] P[0.5](x1 - 1 <= 0)"), 0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  CHECK(rho(t, atom("mode{1}"), 0) == std::numeric_limits<double>::infinity());
  CHECK(rho(t, atom("mode{1}"), 1) == std::numeric_limits<double>::infinity());

  const FormulaPtr both = atom("P[0.5](x1 - 1 <= 0) & P[0.5](x1 - 2 <= 0)");
  CHECK(rho(t, both, 0) == doctest::Approx(1.0).epsilon(1e-12));
  const FormulaPtr either = atom("P[0.5](x1 - 1 <= 0) | P[0.5](x1 - 2 <= 0)");
  CHECK(rho(t, either, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("evaluation past K extends the loop; drifting plans are rejected") {
  const SwitchedSystem sys = integrator1d();
  {
    const KLTrajectory t = stationary(sys, 1, 1);
    // window runs to 5 on a K=1 lasso: the evaluator replays the loop
    CHECK_NOTHROW((void)rho(t, atom("G[0,5] P[0.1](x1 - 1 <= 0)"), 0));
  }
  {
    KLTrajectory t = stationary(sys, 1, 1);
    t.actions[0].u(0) = 1.0; // replaying this action leaves the stored means
    CHECK_THROWS_AS((void)rho(t, atom("G[0,5] P[0.1](x1 - 1 <= 0)"), 0),
                    std::runtime_error);
  }
}

TEST_CASE("unroll") {
  const SwitchedSystem sys = integrator1d();
  const KLTrajectory t = stationary(sys, 2, 2);
  {
    const KLTrajectory same = unroll(0, t, sys);
    CHECK(same.K == t.K);
    CHECK(same.L == t.L);
    REQUIRE(same.beliefs.size() == t.beliefs.size());
    for (std::size_t i = 0; i < t.beliefs.size(); ++i) {
      CHECK(same.beliefs[i].mean == t.beliefs[i].mean);
      CHECK(same.beliefs[i].cov == t.beliefs[i].cov);
    }
  }
  {
    const KLTrajectory grown = unroll(2, t, sys);
    CHECK(grown.K == 4);
    CHECK(grown.L == 4); // L + N·period
    REQUIRE(grown.beliefs.size() == 5);
    for (const GaussianBelief& b : grown.beliefs) CHECK(b.mean(0) == 0.0);
    // covariances keep contracting along the repeats
    for (int k = 1; k <= 4; ++k)
      CHECK(grown.beliefs[k].cov(0, 0) < grown.beliefs[k - 1].cov(0, 0));
    CHECK(grown.actions.size() == 4);
    CHECK(grown.actions.back().q == 1);
  }
  CHECK_THROWS_AS((void)unroll(-1, t, sys), std::invalid_argument);
  {
    KLTrajectory drifting = stationary(sys, 1, 1);
    drifting.actions[0].u(0) = 1.0;
    CHECK_THROWS_AS((void)unroll(1, drifting, sys), std::runtime_error);
  }
}

TEST_CASE("sat_bool agrees with the sign of rho") {
  Rng rng(202);
  for (int t = 0; t < 100; ++t) {
    const oracle::RandomLassoCase cs = oracle::random_contracting_lasso(rng);
    for (int k : {0, cs.traj.L}) {
      const double r = rho(cs.traj, cs.formula, k);
      const bool s = sat_bool(cs.traj, cs.formula, k);
      if (r > 1e-9) CHECK(s);
      if (r < -1e-9) CHECK(!s);
    }
  }
}

TEST_CASE("lasso robustness lower-bounds the unrolled sequence") {
  Rng rng(404);
  for (int t = 0; t < 100; ++t) {
    const oracle::RandomLassoCase cs = oracle::random_contracting_lasso(rng);
    const int len = std::max(cs.traj.K + 1,
                             formula_horizon(cs.formula) + 1) +
                    3 * cs.traj.period();
    const auto [bs, qs] = oracle::unroll_lasso(cs.traj, *cs.sys, len);
    const double full = oracle::finite_belief_rho(bs, qs, cs.formula, 0);
    CHECK(rho(cs.traj, cs.formula, 0) <= full + 1e-9);
  }
}

TEST_CASE("satisfaction survives unrolling") {
  Rng rng(606);
  int satisfied = 0;
  for (int t = 0; t < 60; ++t) {
    const oracle::RandomLassoCase cs = oracle::random_contracting_lasso(rng);
    if (!sat_bool(cs.traj, cs.formula, 0)) continue;
    if (rho(cs.traj, cs.formula, 0) < 1e-9) continue; // boundary: skip
    ++satisfied;
    for (int n = 1; n <= 2; ++n)
      CHECK(sat_bool(unroll(n, cs.traj, *cs.sys), cs.formula, 0));
  }
  CHECK(satisfied > 5);
}
