#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "prstl/abstraction.hpp"
#include "prstl/pipeline.hpp"
#include "prstl/scenario.hpp"
#include "prstl/trajectory.hpp"

using namespace prstl;
using nlohmann::json;

namespace {

Scenario load(const char* name) {
  return load_scenario(std::string(SCENARIO_DIR) + "/" + name);
}

// One full light-dark synthesis, shared across the cases below. The
// scenario must outlive every plan that borrows its system.
struct LdFixture {
  Scenario s;
  std::string log;
  SynthesisResult res;
};

const LdFixture& ld() {
  static LdFixture* fx = [] {
    auto* f = new LdFixture;
    f->s = load("lightdark.json");
    std::ostringstream log;
    f->res = synthesize(f->s, 7, &log);
    f->log = log.str();
    return f;
  }();
  return *fx;
}

void expect_parse_error(const json& doc, const Scenario& s,
                        const std::string& needle) {
  try {
    (void)parse_plan(doc.dump(), s);
    FAIL_CHECK("expected invalid_argument containing '" << needle << "'");
  } catch (const std::invalid_argument& e) {
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                  "message was: " << e.what());
  }
}

} // namespace

TEST_CASE("synthesize proves the disconnected scenario unsatisfiable") {
  const Scenario s = load("disconnected.json");
  std::ostringstream log;
  const SynthesisResult res = synthesize(s, 1, &log);
  CHECK(res.status == SynthesisStatus::Unsat);
  CHECK(!res.plan.has_value());
  CHECK(res.rounds == 1);
  CHECK(res.cex_count == 1);
  CHECK(res.max_bound == 2);
  CHECK(log.str() ==
        "bmc: K=1 sat\n"
        "witness: states=0,1 modes=1 L=1\n"
        "feasibility: infeasible, cex prefix length 0\n"
        "bmc: K=1 no witness\n"
        "bmc: K=2 exhausted; unsat\n");
}

TEST_CASE("a one-round budget stops after the first counterexample") {
  const Scenario s = load("disconnected.json");
  std::ostringstream log;
  const SynthesisResult res = synthesize(s, 1, &log, 1);
  CHECK(res.status == SynthesisStatus::BudgetExhausted);
  CHECK(res.rounds == 1);
  CHECK(res.cex_count == 1);
  CHECK(log.str() ==
        "bmc: K=1 sat\n"
        "witness: states=0,1 modes=1 L=1\n"
        "feasibility: infeasible, cex prefix length 0\n"
        "budget: 1 rounds exhausted\n");

  CHECK_THROWS_AS((void)synthesize(s, 1, nullptr, 0), std::invalid_argument);
}

TEST_CASE("an initial belief outside every cone is unsat up front") {
  Scenario s = load("lightdark.json");
  s.init = GaussianBelief(Eigen::Vector2d(6.5, 4.5),
                          0.01 * Eigen::Matrix2d::Identity());
  std::ostringstream log;
  const SynthesisResult res = synthesize(s, 1, &log);
  CHECK(res.status == SynthesisStatus::Unsat);
  CHECK(res.rounds == 0);
  CHECK(res.max_bound == 0);
  CHECK(log.str() == "abstraction: initial belief in no state cone; unsat\n");
}

TEST_CASE("light-dark synthesis returns a gated plan") {
  const LdFixture& fx = ld();
  REQUIRE(fx.res.status == SynthesisStatus::Plan);
  REQUIRE(fx.res.plan.has_value());
  const Plan& p = *fx.res.plan;

  CHECK(p.witness.states == std::vector<int>{0, 1});
  CHECK(p.witness.modes == std::vector<int>{1});
  CHECK(p.witness.L == 1);
  CHECK(p.rho0 >= 0.0);
  CHECK(p.rho0 == rho(p.trajectory, fx.s.formula, 0));

  CHECK(p.provenance.seed == 7);
  CHECK(p.provenance.rounds == 1);
  CHECK(p.provenance.max_bound == 1);
  CHECK(p.provenance.cex_count == 0);
  CHECK(p.provenance.feasibility_iterations >= 1);
  CHECK(p.provenance.feasibility_iterations <= fx.s.params.iters);

  // the loop section must sit inside the target cone of the witness
  const AbstractionTS abs =
      build_abstraction(fx.s.formula, fx.s.sys, fx.s.init);
  for (int j = p.trajectory.L; j <= p.trajectory.K; ++j)
    CHECK(cone_contains(abs.states[1].cone, p.trajectory.beliefs[j]));

  CHECK(fx.log.find("bmc: K=1 sat\n") != std::string::npos);
  CHECK(fx.log.find("witness: states=0,1 modes=1 L=1\n") !=
        std::string::npos);
  CHECK(fx.log.find("feasibility: found rho=") != std::string::npos);
}

TEST_CASE("plan JSON round-trips byte for byte") {
  const LdFixture& fx = ld();
  REQUIRE(fx.res.plan.has_value());
  const std::string text = dump_plan(*fx.res.plan);
  const Plan back = parse_plan(text, fx.s);
  CHECK(dump_plan(back) == text);
  CHECK(back.rho0 == fx.res.plan->rho0);
  CHECK(back.witness.states == fx.res.plan->witness.states);
}

TEST_CASE("parse_plan rejects corrupted documents") {
  const LdFixture& fx = ld();
  REQUIRE(fx.res.plan.has_value());
  const json good = json::parse(dump_plan(*fx.res.plan));

  json doc = good;
  doc["extra"] = 1;
  expect_parse_error(doc, fx.s, "/extra: unknown key");

  doc = good;
  doc.erase("rho");
  expect_parse_error(doc, fx.s, "/rho: missing");

  doc = good;
  doc["L"] = 0;
  expect_parse_error(doc, fx.s, "/L: must be in [1, K]");

  doc = good;
  doc["actions"][0]["q"] = 9;
  expect_parse_error(doc, fx.s, "/actions/0/q: undeclared mode id");

  doc = good;
  doc["witness"]["L"] = 0;
  expect_parse_error(doc, fx.s, "/witness/L");

  CHECK_THROWS_AS((void)parse_plan("{", fx.s), std::invalid_argument);
  CHECK_THROWS_AS((void)load_plan("/nonexistent/plan.json", fx.s),
                  std::runtime_error);
}

TEST_CASE("the gate rejects plans that do not replay") {
  const LdFixture& fx = ld();
  REQUIRE(fx.res.plan.has_value());
  const KLTrajectory& t = fx.res.plan->trajectory;
  const json good = json::parse(dump_plan(*fx.res.plan));

  json doc = good;
  doc["rho"] = doc["rho"].get<double>() + 0.5;
  try {
    (void)parse_plan(doc.dump(), fx.s);
    FAIL_CHECK("expected the rho gate to fire");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) ==
          "plan: stored rho does not match re-evaluation");
  }

  // perturb a belief the loop-closure checks do not look at first
  int idx = -1;
  for (int j = 1; j < t.K; ++j)
    if (j != t.L - 1) {
      idx = j;
      break;
    }
  doc = good;
  if (idx >= 0) {
    doc["beliefs"][idx]["mean"][0] =
        doc["beliefs"][idx]["mean"][0].get<double>() + 0.1;
    try {
      (void)parse_plan(doc.dump(), fx.s);
      FAIL_CHECK("expected the replay gate to fire");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "plan: stored beliefs do not replay");
    }
  } else {
    doc["beliefs"][t.K]["mean"][0] =
        doc["beliefs"][t.K]["mean"][0].get<double>() + 0.1;
    CHECK_THROWS_AS((void)parse_plan(doc.dump(), fx.s), std::runtime_error);
  }
}

TEST_CASE("identical seeds give identical plans") {
  const LdFixture& fx = ld();
  REQUIRE(fx.res.plan.has_value());
  const SynthesisResult again = synthesize(fx.s, 7);
  REQUIRE(again.status == SynthesisStatus::Plan);
  CHECK(dump_plan(*again.plan) == dump_plan(*fx.res.plan));
}
