#pragma once

#include <map>
#include <string>

#include "prstl/belief.hpp"
#include "prstl/feasibility.hpp"
#include "prstl/formula.hpp"
#include "prstl/lqr.hpp"
#include "prstl/system.hpp"

namespace prstl {

struct Scenario {
  SwitchedSystem sys;
  GaussianBelief init;
  std::string formula_text;
  FormulaPtr formula; // formula_text parsed against sys
  FeasibilityParams params; // seed stays 0; the CLI supplies it
  LqrParams lqr;
  std::map<std::string, double> constants;
};

// Parses and fully validates a scenario. Schema violations throw
// std::invalid_argument naming the offending JSON pointer (e.g.
// "/modes/0/A"); I/O failures throw std::runtime_error.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

// Canonical JSON with every default filled in; parse_scenario ∘ dump_scenario
// reproduces the same Scenario.
std::string dump_scenario(const Scenario& s);

} // namespace prstl
