#include "prstl/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json_util.hpp"
#include "prstl/abstraction.hpp"
#include "prstl/bmc.hpp"
#include "prstl/executor.hpp"
#include "prstl/gauss.hpp"
#include "prstl/pipeline.hpp"
#include "prstl/scenario.hpp"

namespace prstl {

namespace {

using jsonu::Json;

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp + " failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::ostringstream make_csv() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

std::string montecarlo_csv(const MonteCarloStats& st, int n) {
  std::ostringstream os = make_csv();
  os << "run_index,success,rho_realized";
  for (int i = 0; i < n; ++i) os << ",final_state_" << i;
  os << "\n";
  for (std::size_t r = 0; r < st.results.size(); ++r) {
    const RunResult& res = st.results[r];
    os << r << "," << (res.success ? 1 : 0) << "," << res.rho;
    for (int i = 0; i < n; ++i) os << "," << res.final_state[i];
    os << "\n";
  }
  return os.str();
}

std::string trace_csv(const ExecutionTrace& tr) {
  std::ostringstream os = make_csv();
  const int n = static_cast<int>(tr.states.front().size());
  const int p = static_cast<int>(tr.observations.front().size());
  const int m = tr.inputs.empty() ? 0 : static_cast<int>(tr.inputs.front().size());
  os << "k";
  for (int i = 0; i < n; ++i) os << ",x_" << i;
  for (int i = 0; i < p; ++i) os << ",y_" << i;
  for (int i = 0; i < n; ++i) os << ",est_" << i;
  for (int i = 0; i < n; ++i) os << ",var_" << i;
  for (int i = 0; i < m; ++i) os << ",u_" << i;
  os << ",mode\n";
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    os << k;
    for (int i = 0; i < n; ++i) os << "," << tr.states[k][i];
    for (int i = 0; i < p; ++i) os << "," << tr.observations[k][i];
    for (int i = 0; i < n; ++i) os << "," << tr.estimates[k].mean[i];
    for (int i = 0; i < n; ++i) os << "," << tr.estimates[k].cov(i, i);
    if (k < tr.inputs.size()) {
      for (int i = 0; i < m; ++i) os << "," << tr.inputs[k][i];
      os << "," << tr.modes[k];
    } else {
      for (int i = 0; i < m; ++i) os << ",";
      os << ",";
    }
    os << "\n";
  }
  return os.str();
}

std::string abstraction_json(const AbstractionTS& abs) {
  Json j;
  j["initial"] = abs.initial;
  j["actions"] = abs.actions;
  Json states = Json::array();
  for (const AbstractionState& st : abs.states) {
    Json sj;
    sj["id"] = st.id;
    sj["label"] = std::vector<int>(st.label.begin(), st.label.end());
    sj["allowed_modes"] =
        std::vector<int>(st.allowed_modes.begin(), st.allowed_modes.end());
    Json cone = Json::array();
    for (const ConeConstraint& cc : st.cone.constraints)
      cone.push_back(Json{{"h", jsonu::dump_vector(cc.h)},
                          {"c", cc.c},
                          {"eps", cc.eps},
                          {"coefficient", gauss_quantile(1.0 - cc.eps)}});
    sj["cone"] = std::move(cone);
    states.push_back(std::move(sj));
  }
  j["states"] = std::move(states);
  Json transitions = Json::array();
  for (const auto& [from, q, to] : abs.transitions)
    transitions.push_back(std::vector<int>{from, q, to});
  j["transitions"] = std::move(transitions);
  return j.dump(2) + "\n";
}

struct PlanArgs {
  std::string scenario, out, log, trace;
  std::uint64_t seed = 0;
  int max_rounds = 50;
};

int cmd_plan(const PlanArgs& a) {
  const Scenario s = load_scenario(a.scenario);
  std::ofstream log_file, trace_file;
  std::ostream* log = nullptr;
  std::ostream* trace = nullptr;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write " + a.log);
    log = &log_file;
  }
  if (!a.trace.empty()) {
    trace_file.open(a.trace, std::ios::trunc);
    if (!trace_file) throw std::runtime_error("cannot write " + a.trace);
    trace = &trace_file;
  }

  const SynthesisResult res = synthesize(s, a.seed, log, a.max_rounds, trace);
  switch (res.status) {
    case SynthesisStatus::Plan: {
      write_atomic(a.out, dump_plan(*res.plan));
      std::cout << std::setprecision(17) << "plan: rho=" << res.plan->rho0
                << " K=" << res.plan->trajectory.K
                << " L=" << res.plan->trajectory.L << " rounds=" << res.rounds
                << " cexs=" << res.cex_count << "\n";
      return 0;
    }
    case SynthesisStatus::Unsat:
      std::cout << "unsat: rounds=" << res.rounds << " cexs=" << res.cex_count
                << " max_bound=" << res.max_bound << "\n";
      return 1;
    case SynthesisStatus::BudgetExhausted:
      std::cout << "budget-exhausted: rounds=" << res.rounds
                << " cexs=" << res.cex_count << "\n";
      return 3;
  }
  return 2;
}

int cmd_abstraction(const std::string& scenario, const std::string& out) {
  const Scenario s = load_scenario(scenario);
  const AbstractionTS abs = build_abstraction(s.formula, s.sys, s.init);
  const std::string text = abstraction_json(abs);
  if (out.empty())
    std::cout << text;
  else
    write_atomic(out, text);
  return 0;
}

int cmd_montecarlo(const std::string& scenario, const std::string& plan_path,
                   int runs, std::uint64_t seed, const std::string& out,
                   bool serial) {
  const Scenario s = load_scenario(scenario);
  const Plan plan = load_plan(plan_path, s);
  const MonteCarloStats st =
      serial ? monte_carlo_serial(plan.trajectory, s.sys, s.lqr, s.formula,
                                  runs, seed)
             : monte_carlo(plan.trajectory, s.sys, s.lqr, s.formula, runs,
                           seed);
  if (!out.empty()) write_atomic(out, montecarlo_csv(st, s.sys.n));
  std::cout << std::setprecision(17) << "rate=" << st.rate << " successes="
            << st.successes << "/" << st.runs << " mean_rho=" << st.mean_rho
            << " mean_instant_product=" << st.mean_instant_product << "\n";
  return 0;
}

int cmd_execute(const std::string& scenario, const std::string& plan_path,
                std::uint64_t seed, int steps, const std::string& out) {
  const Scenario s = load_scenario(scenario);
  const Plan plan = load_plan(plan_path, s);
  if (steps < 0) steps = execution_horizon(plan.trajectory, s.formula);
  Rng rng(seed);
  const ExecutionTrace tr = execute(plan.trajectory, s.sys, s.lqr, steps, rng);
  write_atomic(out, trace_csv(tr));
  std::cout << "executed " << steps << " steps\n";
  return 0;
}

int cmd_rho(const std::string& scenario, const std::string& plan_path) {
  const Scenario s = load_scenario(scenario);
  const Plan plan = load_plan(plan_path, s);
  std::cout << std::setprecision(17) << rho(plan.trajectory, s.formula, 0)
            << "\n";
  return 0;
}

int cmd_bmc_debug(const std::string& scenario, int max_k) {
  const Scenario s = load_scenario(scenario);
  const AbstractionTS abs = build_abstraction(s.formula, s.sys, s.init);
  const LtlPtr ltl = to_ltl(s.formula);
  std::cout << "abstraction: " << abs.states.size() << " states, "
            << abs.transitions.size() << " transitions, initial "
            << abs.initial << "\n";
  for (int K = 1; K <= max_k; ++K) {
    const BmcResult res = bmc_search(abs, ltl, {}, K);
    if (res.status == BmcStatus::NoWitnessAtBound) {
      std::cout << "K=" << K << ": no witness\n";
      continue;
    }
    if (res.status == BmcStatus::Exhausted) {
      std::cout << "K=" << K << ": exhausted\n";
      return 0;
    }
    std::cout << "K=" << K << ": sat states=";
    for (std::size_t i = 0; i < res.witness.states.size(); ++i)
      std::cout << (i ? "," : "") << res.witness.states[i];
    std::cout << " modes=";
    for (std::size_t i = 0; i < res.witness.modes.size(); ++i)
      std::cout << (i ? "," : "") << res.witness.modes[i];
    std::cout << " L=" << res.witness.L << "\n";
    return 0;
  }
  return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"PrSTL belief-space planner"};
  app.require_subcommand(1);

  PlanArgs pa;
  CLI::App* plan = app.add_subcommand("plan", "Synthesize a plan");
  plan->add_option("--scenario", pa.scenario, "Scenario JSON")->required();
  plan->add_option("--seed", pa.seed, "RNG seed")->required();
  plan->add_option("--out", pa.out, "Plan output path")->required();
  plan->add_option("--log", pa.log, "Synthesis log path");
  plan->add_option("--trace", pa.trace, "Per-iteration feasibility CSV");
  plan->add_option("--max-rounds", pa.max_rounds, "CEGIS round cap");

  std::string abs_scenario, abs_out;
  CLI::App* abstraction =
      app.add_subcommand("abstraction", "Dump the belief-cone abstraction");
  abstraction->add_option("--scenario", abs_scenario, "Scenario JSON")
      ->required();
  abstraction->add_option("--out", abs_out, "Output path (stdout by default)");

  std::string mc_scenario, mc_plan, mc_out;
  int mc_runs = 100;
  std::uint64_t mc_seed = 0;
  bool mc_serial = false;
  CLI::App* montecarlo =
      app.add_subcommand("montecarlo", "Monte Carlo validation of a plan");
  montecarlo->add_option("--scenario", mc_scenario, "Scenario JSON")
      ->required();
  montecarlo->add_option("--plan", mc_plan, "Plan JSON")->required();
  montecarlo->add_option("--runs", mc_runs, "Number of rollouts")
      ->check(CLI::PositiveNumber);
  montecarlo->add_option("--seed", mc_seed, "RNG seed")->required();
  montecarlo->add_option("--out", mc_out, "Per-run CSV path");
  montecarlo->add_flag("--serial", mc_serial,
                       "Use the serial reference implementation");

  std::string ex_scenario, ex_plan, ex_out;
  std::uint64_t ex_seed = 0;
  int ex_steps = -1;
  CLI::App* execute = app.add_subcommand("execute", "Single closed-loop run");
  execute->add_option("--scenario", ex_scenario, "Scenario JSON")->required();
  execute->add_option("--plan", ex_plan, "Plan JSON")->required();
  execute->add_option("--seed", ex_seed, "RNG seed")->required();
  execute->add_option("--steps", ex_steps,
                      "Steps to run (default: formula horizon + loop)");
  execute->add_option("--out", ex_out, "Per-step CSV path")->required();

  std::string rho_scenario, rho_plan;
  CLI::App* rho_cmd =
      app.add_subcommand("rho", "Recompute a plan's robustness");
  rho_cmd->add_option("--scenario", rho_scenario, "Scenario JSON")->required();
  rho_cmd->add_option("--plan", rho_plan, "Plan JSON")->required();

  std::string bmc_scenario;
  int bmc_max_k = 10;
  CLI::App* bmc =
      app.add_subcommand("bmc-debug", "Witness search without feasibility");
  bmc->add_option("--scenario", bmc_scenario, "Scenario JSON")->required();
  bmc->add_option("--max-k", bmc_max_k, "Deepening cap")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (plan->parsed()) return cmd_plan(pa);
    if (abstraction->parsed()) return cmd_abstraction(abs_scenario, abs_out);
    if (montecarlo->parsed())
      return cmd_montecarlo(mc_scenario, mc_plan, mc_runs, mc_seed, mc_out,
                            mc_serial);
    if (execute->parsed())
      return cmd_execute(ex_scenario, ex_plan, ex_seed, ex_steps, ex_out);
    if (rho_cmd->parsed()) return cmd_rho(rho_scenario, rho_plan);
    if (bmc->parsed()) return cmd_bmc_debug(bmc_scenario, bmc_max_k);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

} // namespace prstl
