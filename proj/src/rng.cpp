#include "prstl/rng.hpp"

#include "prstl/gauss.hpp"

#include <stdexcept>

namespace prstl {

double Rng::uniform() {
  // 53 random mantissa bits.
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
  double u;
  do {
    u = uniform();
  } while (u == 0.0);
  return u;
}

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
  std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  // Rejection to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t v;
  do {
    v = eng_();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

double Rng::normal() { return gauss_quantile(uniform_open()); }

} // namespace prstl
