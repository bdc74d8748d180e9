#pragma once

#include <cstdint>
#include <random>

namespace prstl {

/// Deterministic random source. Uniform and normal draws go through our own
/// transforms (not std::*_distribution) so that a seed pins the exact stream
/// regardless of standard library implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in (0, 1), never returns an endpoint.
  double uniform_open();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range.
  int uniform_int(int lo, int hi);

  /// Standard normal via inverse-CDF transform.
  double normal();

private:
  std::mt19937_64 eng_;
};

} // namespace prstl
