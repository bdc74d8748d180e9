#pragma once

namespace prstl {

/// Standard normal CDF.
double gauss_cdf(double z);

/// Standard normal quantile (inverse CDF). Rational approximation polished
/// with Halley steps; |gauss_cdf(result) - p| stays well below 1e-9.
/// Requires p in (0, 1); p == 0 or p == 1 map to -inf / +inf.
double gauss_quantile(double p);

} // namespace prstl
