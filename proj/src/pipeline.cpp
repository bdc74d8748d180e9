#include "prstl/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"
#include "prstl/kalman.hpp"

namespace prstl {

namespace {

using jsonu::Json;

std::string witness_line(const LassoWitness& w) {
  std::ostringstream os;
  os << "witness: states=";
  for (std::size_t i = 0; i < w.states.size(); ++i)
    os << (i ? "," : "") << w.states[i];
  os << " modes=";
  for (std::size_t i = 0; i < w.modes.size(); ++i)
    os << (i ? "," : "") << w.modes[i];
  os << " L=" << w.L;
  return os.str();
}

bool same_witness(const LassoWitness& a, const LassoWitness& b) {
  return a.L == b.L && a.states == b.states && a.modes == b.modes;
}

// Replaying the stored actions must regenerate the stored beliefs: every
// covariance and every interior mean within 1e−9; the final mean carries the
// loop-closure snap, so it gets the lasso tolerance instead.
void check_replay(const KLTrajectory& t, const SwitchedSystem& sys) {
  GaussianBelief b = t.beliefs.front();
  for (int k = 0; k < t.K; ++k) {
    b = mlo_step(b, t.actions[k].q, t.actions[k].u, sys);
    const GaussianBelief& want = t.beliefs[k + 1];
    const double mean_tol = k + 1 == t.K ? t.eps_loop : 1e-9;
    if ((b.mean - want.mean).cwiseAbs().maxCoeff() > mean_tol ||
        (b.cov - want.cov).cwiseAbs().maxCoeff() > 1e-9)
      throw std::runtime_error("plan: stored beliefs do not replay");
  }
}

void gate(const Plan& p, const Scenario& s) {
  validate_kl(p.trajectory, s.formula);
  check_replay(p.trajectory, s.sys);
  const double r = rho(p.trajectory, s.formula, 0);
  if (std::abs(r - p.rho0) > 1e-9)
    throw std::runtime_error("plan: stored rho does not match re-evaluation");
  if (r < 0.0) throw std::runtime_error("plan: rho is negative");
}

} // namespace

SynthesisResult synthesize(const Scenario& s, std::uint64_t seed,
                           std::ostream* log, int max_rounds,
                           std::ostream* feasibility_trace) {
  if (max_rounds < 1)
    throw std::invalid_argument("synthesize: max_rounds must be >= 1");
  SynthesisResult out;

  AbstractionTS abs;
  try {
    abs = build_abstraction(s.formula, s.sys, s.init);
  } catch (const NoInitialState&) {
    if (log) *log << "abstraction: initial belief in no state cone; unsat\n";
    out.status = SynthesisStatus::Unsat;
    return out;
  }
  const LtlPtr ltl = to_ltl(s.formula);

  std::vector<FairTS> cexs;
  std::vector<LassoWitness> proposed;
  FeasibilityParams fp = s.params;
  long long feas_iters = 0;
  int K = 1;

  while (true) {
    const BmcResult bres = bmc_search(abs, ltl, cexs, K);
    if (bres.status == BmcStatus::Exhausted) {
      if (log) *log << "bmc: K=" << K << " exhausted; unsat\n";
      out.status = SynthesisStatus::Unsat;
      out.max_bound = K;
      return out;
    }
    if (bres.status == BmcStatus::NoWitnessAtBound) {
      if (log) *log << "bmc: K=" << K << " no witness\n";
      ++K;
      continue;
    }

    out.max_bound = K;
    if (log) *log << "bmc: K=" << K << " sat\n" << witness_line(bres.witness) << "\n";
    for (const LassoWitness& w : proposed)
      if (same_witness(w, bres.witness))
        throw std::logic_error("synthesize: BMC proposed a witness twice");
    proposed.push_back(bres.witness);

    fp.seed = seed + static_cast<std::uint64_t>(out.rounds);
    ++out.rounds;
    const FeasibilityResult fres =
        feasibility_search(abs, bres.witness, s.init, s.sys, s.formula, fp,
                           feasibility_trace);
    feas_iters += fres.stats.iterations;

    if (fres.status == FeasibilityStatus::Found) {
      Plan p;
      p.trajectory = fres.trajectory;
      p.trajectory.sys = &s.sys;
      p.witness = bres.witness;
      p.rho0 = rho(p.trajectory, s.formula, 0);
      p.provenance = {seed, out.rounds, out.max_bound, out.cex_count,
                      feas_iters};
      gate(p, s);
      if (log)
        *log << "feasibility: found rho=" << p.rho0 << " after "
             << fres.stats.iterations << " iterations\n";
      out.status = SynthesisStatus::Plan;
      out.plan = std::move(p);
      return out;
    }

    ++out.cex_count;
    if (log)
      *log << "feasibility: infeasible, cex "
           << (fres.cex.loop ? "lasso" : "prefix") << " length "
           << fres.cex.end() << "\n";
    cexs.push_back(fres.cex);

    if (out.rounds >= max_rounds) {
      if (log) *log << "budget: " << max_rounds << " rounds exhausted\n";
      out.status = SynthesisStatus::BudgetExhausted;
      return out;
    }
  }
}

std::string dump_plan(const Plan& p) {
  Json j;
  j["K"] = p.trajectory.K;
  j["L"] = p.trajectory.L;
  j["rho"] = p.rho0;
  Json beliefs = Json::array();
  for (const GaussianBelief& b : p.trajectory.beliefs)
    beliefs.push_back(Json{{"mean", jsonu::dump_vector(b.mean)},
                           {"cov", jsonu::dump_matrix(b.cov)}});
  j["beliefs"] = std::move(beliefs);
  Json actions = Json::array();
  for (const KLAction& a : p.trajectory.actions)
    actions.push_back(Json{{"q", a.q}, {"u", jsonu::dump_vector(a.u)}});
  j["actions"] = std::move(actions);
  Json w;
  w["states"] = p.witness.states;
  w["modes"] = p.witness.modes;
  w["L"] = p.witness.L;
  j["witness"] = std::move(w);
  j["provenance"] = Json{{"seed", p.provenance.seed},
                         {"rounds", p.provenance.rounds},
                         {"max_bound", p.provenance.max_bound},
                         {"cex_count", p.provenance.cex_count},
                         {"feasibility_iterations",
                          p.provenance.feasibility_iterations}};
  return j.dump(2) + "\n";
}

Plan parse_plan(const std::string& text, const Scenario& s) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
  jsonu::reject_unknown(
      j, "", {"K", "L", "rho", "beliefs", "actions", "witness", "provenance"});

  Plan p;
  p.trajectory.K = jsonu::get_int(jsonu::field(j, "", "K"), "/K");
  p.trajectory.L = jsonu::get_int(jsonu::field(j, "", "L"), "/L");
  p.trajectory.eps_loop = s.params.eps_loop;
  p.trajectory.sys = &s.sys;
  p.rho0 = jsonu::get_num(jsonu::field(j, "", "rho"), "/rho");
  if (p.trajectory.K < 1) jsonu::fail("/K", "must be >= 1");
  if (p.trajectory.L < 1 || p.trajectory.L > p.trajectory.K)
    jsonu::fail("/L", "must be in [1, K]");

  const Json& beliefs = jsonu::field(j, "", "beliefs");
  if (!beliefs.is_array() ||
      static_cast<int>(beliefs.size()) != p.trajectory.K + 1)
    jsonu::fail("/beliefs", "expected K+1 entries");
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    const std::string ptr = "/beliefs/" + std::to_string(i);
    jsonu::reject_unknown(beliefs[i], ptr, {"mean", "cov"});
    const Eigen::VectorXd mean = jsonu::get_vector(
        jsonu::field(beliefs[i], ptr, "mean"), ptr + "/mean");
    if (mean.size() != s.sys.n) jsonu::fail(ptr + "/mean", "expected n entries");
    const Eigen::MatrixXd cov = jsonu::get_matrix(
        jsonu::field(beliefs[i], ptr, "cov"), ptr + "/cov", s.sys.n, s.sys.n);
    try {
      p.trajectory.beliefs.emplace_back(mean, cov);
    } catch (const std::exception& e) {
      jsonu::fail(ptr + "/cov", e.what());
    }
  }

  const Json& actions = jsonu::field(j, "", "actions");
  if (!actions.is_array() ||
      static_cast<int>(actions.size()) != p.trajectory.K)
    jsonu::fail("/actions", "expected K entries");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const std::string ptr = "/actions/" + std::to_string(i);
    jsonu::reject_unknown(actions[i], ptr, {"q", "u"});
    KLAction a;
    a.q = jsonu::get_int(jsonu::field(actions[i], ptr, "q"), ptr + "/q");
    bool known = false;
    for (const Mode& md : s.sys.modes) known = known || md.id == a.q;
    if (!known) jsonu::fail(ptr + "/q", "undeclared mode id");
    a.u = jsonu::get_vector(jsonu::field(actions[i], ptr, "u"), ptr + "/u");
    if (a.u.size() != s.sys.m) jsonu::fail(ptr + "/u", "expected m entries");
    p.trajectory.actions.push_back(std::move(a));
  }

  {
    const Json& w = jsonu::field(j, "", "witness");
    jsonu::reject_unknown(w, "/witness", {"states", "modes", "L"});
    const Json& ws = jsonu::field(w, "/witness", "states");
    if (!ws.is_array() || ws.size() < 2)
      jsonu::fail("/witness/states", "expected at least two entries");
    for (std::size_t i = 0; i < ws.size(); ++i)
      p.witness.states.push_back(
          jsonu::get_int(ws[i], "/witness/states/" + std::to_string(i)));
    const Json& wm = jsonu::field(w, "/witness", "modes");
    if (!wm.is_array() || wm.size() + 1 != ws.size())
      jsonu::fail("/witness/modes", "expected one entry per transition");
    for (std::size_t i = 0; i < wm.size(); ++i)
      p.witness.modes.push_back(
          jsonu::get_int(wm[i], "/witness/modes/" + std::to_string(i)));
    p.witness.L = jsonu::get_int(jsonu::field(w, "/witness", "L"), "/witness/L");
    if (p.witness.L < 1 || p.witness.L > static_cast<int>(wm.size()))
      jsonu::fail("/witness/L", "must be in [1, K̃]");
  }

  {
    const Json& pv = jsonu::field(j, "", "provenance");
    jsonu::reject_unknown(pv, "/provenance",
                          {"seed", "rounds", "max_bound", "cex_count",
                           "feasibility_iterations"});
    p.provenance.seed =
        jsonu::get_u64(jsonu::field(pv, "/provenance", "seed"),
                       "/provenance/seed");
    p.provenance.rounds = jsonu::get_int(
        jsonu::field(pv, "/provenance", "rounds"), "/provenance/rounds");
    p.provenance.max_bound =
        jsonu::get_int(jsonu::field(pv, "/provenance", "max_bound"),
                       "/provenance/max_bound");
    p.provenance.cex_count =
        jsonu::get_int(jsonu::field(pv, "/provenance", "cex_count"),
                       "/provenance/cex_count");
    p.provenance.feasibility_iterations = static_cast<long long>(
        jsonu::get_u64(jsonu::field(pv, "/provenance", "feasibility_iterations"),
                       "/provenance/feasibility_iterations"));
  }

  gate(p, s);
  return p;
}

Plan load_plan(const std::string& path, const Scenario& s) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open plan " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_plan(buf.str(), s);
}

} // namespace prstl
