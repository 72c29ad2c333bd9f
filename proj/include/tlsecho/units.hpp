#pragma once

#include <cmath>

#include "tlsecho/constants.hpp"

namespace tlsecho::units {

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

inline double debye_to_coulomb_meter(double d) { return d * phys::debye; }
inline double coulomb_meter_to_debye(double cm) { return cm / phys::debye; }

inline double hz_to_angular(double hz) { return hz * phys::two_pi; }
inline double angular_to_hz(double rad_per_s) { return rad_per_s / phys::two_pi; }

}  // namespace tlsecho::units
