#pragma once

// Test-only oracles. Naive unbounded term-by-term summation of the defining
// power series in long double, with library gamma functions; independent of
// the implementation's recurrences, scaling and switch points.

#include <cmath>

namespace oracle {

inline long double bessel_i0(long double x) {
  long double sum = 0.0L;
  for (int k = 0; k < 2000; ++k) {
    const long double g = tgammal(k + 1.0L);
    const long double term = powl(x / 2.0L, 2.0L * k) / (g * g);
    sum += term;
    if (k > x / 2.0L && term < sum * 1e-25L) break;
  }
  return sum;
}

inline long double bessel_i1(long double x) {
  long double sum = 0.0L;
  for (int k = 0; k < 2000; ++k) {
    const long double term =
        powl(x / 2.0L, 2.0L * k + 1.0L) / (tgammal(k + 1.0L) * tgammal(k + 2.0L));
    sum += term;
    if (k > x / 2.0L && term < sum * 1e-25L) break;
  }
  return sum;
}

inline long double struve_l0(long double x) {
  long double sum = 0.0L;
  for (int k = 0; k < 2000; ++k) {
    const long double g = tgammal(k + 1.5L);
    const long double term = powl(x / 2.0L, 2.0L * k + 1.0L) / (g * g);
    sum += term;
    if (k > x / 2.0L && term < sum * 1e-25L) break;
  }
  return sum;
}

inline long double struve_l1(long double x) {
  long double sum = 0.0L;
  for (int k = 0; k < 2000; ++k) {
    const long double term = powl(x / 2.0L, 2.0L * k + 2.0L) /
                             (tgammal(k + 1.5L) * tgammal(k + 2.5L));
    sum += term;
    if (k > x / 2.0L && term < sum * 1e-25L) break;
  }
  return sum;
}

}  // namespace oracle
