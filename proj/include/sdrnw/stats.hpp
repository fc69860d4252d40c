#pragma once

#include <span>

namespace sdrnw {

/// Standard normal quantile for p in (0, 1). Acklam's rational approximation
/// followed by one Halley step against erfc, so the result is accurate to
/// well below 1e-9. Throws ArgumentError outside (0, 1).
double normal_quantile(double p);

/// z such that P(|Z| <= z) = level.
inline double two_sided_z(double level) { return normal_quantile(1.0 - 0.5 * (1.0 - level)); }

double mean(std::span<const double> v);

/// Quantile with linear interpolation between order statistics (type 7).
double quantile(std::span<const double> v, double prob);
inline double median(std::span<const double> v) { return quantile(v, 0.5); }

}  // namespace sdrnw
