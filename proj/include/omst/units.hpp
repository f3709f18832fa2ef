#pragma once

// Unit conventions used throughout the library:
//   time      -> microseconds (us)
//   rates     -> angular frequency, rad/us
//   couplings -> rad/us
// Frequencies quoted in cycles (MHz) convert through the single helper
// below; 1 MHz of ordinary frequency equals 2*pi rad/us of angular
// frequency, so the scheme keeps t*g products dimensionless.

#include <numbers>

namespace omst::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Ordinary frequency in MHz -> angular frequency in rad/us.
inline constexpr double rad_per_us_from_mhz(double f_mhz) { return two_pi * f_mhz; }

} // namespace omst::units
