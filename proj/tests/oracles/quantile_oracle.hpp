#pragma once

namespace prstl::oracle {

// Standard normal CDF, computed from scratch: Maclaurin series for erf on
// the central range, Laplace continued fraction for erfc on the tails, all
// in long double. Deliberately shares no code path with prstl::gauss_cdf.
double normal_cdf(double z);

// Inverse CDF by plain bisection on normal_cdf. Requires p in (0, 1).
double normal_quantile(double p);

} // namespace prstl::oracle
