// Times the OpenMP Monte Carlo fan-out against the serial reference on the
// light-dark plan. Not part of the test suite; run manually:
//   bench_montecarlo <scenario.json> <plan.json> [runs]

#include <chrono>
#include <iostream>

#include "prstl/executor.hpp"
#include "prstl/pipeline.hpp"
#include "prstl/scenario.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: bench_montecarlo <scenario.json> <plan.json> [runs]\n";
    return 2;
  }
  const int runs = argc > 3 ? std::atoi(argv[3]) : 500;

  const prstl::Scenario s = prstl::load_scenario(argv[1]);
  const prstl::Plan plan = prstl::load_plan(argv[2], s);

  const auto time_it = [&](auto&& fn, const char* name) {
    const auto t0 = std::chrono::steady_clock::now();
    const prstl::MonteCarloStats st = fn();
    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    std::cout << name << ": " << dt.count() << " s, rate " << st.rate << "\n";
    return st;
  };

  const auto serial = time_it(
      [&] {
        return prstl::monte_carlo_serial(plan.trajectory, s.sys, s.lqr,
                                         s.formula, runs, 1);
      },
      "serial");
  const auto parallel = time_it(
      [&] {
        return prstl::monte_carlo(plan.trajectory, s.sys, s.lqr, s.formula,
                                  runs, 1);
      },
      "parallel");

  for (int i = 0; i < runs; ++i) {
    const prstl::RunResult& a = serial.results[i];
    const prstl::RunResult& b = parallel.results[i];
    if (a.success != b.success || a.rho != b.rho ||
        a.instant_product != b.instant_product) {
      std::cerr << "mismatch at run " << i << "\n";
      return 1;
    }
  }
  std::cout << "serial and parallel results identical\n";
  return 0;
}
