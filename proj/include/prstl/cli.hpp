#pragma once

namespace prstl {

// Subcommands: plan, abstraction, montecarlo, execute, rho, bmc-debug.
// Exit codes: 0 success, 1 unsatisfiable, 2 validation/usage error,
// 3 budget exhausted. All file outputs are written atomically.
int run_cli(int argc, const char* const* argv);

} // namespace prstl
