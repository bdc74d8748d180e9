#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "prstl/bmc.hpp"
#include "prstl/feasibility.hpp"
#include "prstl/scenario.hpp"
#include "prstl/trajectory.hpp"

namespace prstl {

struct Provenance {
  std::uint64_t seed = 0;
  int rounds = 0;         // BMC-Sat → feasibility rounds
  int max_bound = 0;      // final K̃
  int cex_count = 0;
  long long feasibility_iterations = 0;
};

struct Plan {
  KLTrajectory trajectory;
  LassoWitness witness;
  double rho0 = 0.0;
  Provenance provenance;
};

enum class SynthesisStatus { Plan, Unsat, BudgetExhausted };

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::Unsat;
  std::optional<Plan> plan;
  int rounds = 0;
  int cex_count = 0;
  int max_bound = 0;
};

// Iterative-deepening CEGIS: K̃ starts at 1; Sat bounds go to the
// feasibility search, Infeasible appends the counterexample and retries the
// same bound, NoWitnessAtBound deepens, Exhausted is Unsat. A returned plan
// has passed the robustness gate (independent ρ ≥ 0 re-evaluation plus an
// mlo_step replay of the stored beliefs within 1e−9). `log`, when given,
// receives one line per BMC verdict and proposed witness. Stops with
// BudgetExhausted after max_rounds feasibility rounds.
SynthesisResult synthesize(const Scenario& s, std::uint64_t seed,
                           std::ostream* log = nullptr, int max_rounds = 50,
                           std::ostream* feasibility_trace = nullptr);

// Canonical plan JSON (beliefs with row-major covariances, actions, K, L,
// ρ, witness, provenance); identical plans dump to identical bytes.
std::string dump_plan(const Plan& p);

// Parses and revalidates against the scenario: schema errors throw
// std::invalid_argument with a JSON pointer, gate violations (replay drift,
// ρ mismatch or ρ < 0) throw std::runtime_error. The returned trajectory
// borrows s.sys.
Plan parse_plan(const std::string& text, const Scenario& s);
Plan load_plan(const std::string& path, const Scenario& s);

} // namespace prstl
