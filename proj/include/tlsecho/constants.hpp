#pragma once

// Physical constants (CODATA 2018). All angular frequencies and rates in this
// library are stored as angular values in rad/s; file formats and CLI flags
// that carry the conventional value/(2*pi) convert at the boundary.

namespace tlsecho::phys {

inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double k_boltzmann = 1.380649e-23;   // J / K
inline constexpr double epsilon0 = 8.8541878128e-12;  // F / m
inline constexpr double debye = 3.335641e-30;         // C m per debye
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 6.28318530717958647692;

}  // namespace tlsecho::phys
