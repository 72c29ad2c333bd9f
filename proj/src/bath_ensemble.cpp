#include "tlsecho/bath_ensemble.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tlsecho/constants.hpp"

namespace tlsecho {
namespace {

void validate(const BathEnsemble& b) {
  if (!(b.density >= 0.0) || !(b.dipole_a > 0.0) || !(b.dipole_b > 0.0) || !(b.epsilon > 0.0) ||
      b.n_bath == 0 || !(b.r_min > 0.0) || !(b.r_max > b.r_min)) {
    throw std::invalid_argument("BathEnsemble: require dipoles, permittivity, radii > 0, "
                                "r_max > r_min and n_bath >= 1");
  }
}

struct Partial {
  double sum = 0.0;
  double sum_sq = 0.0;
};

Partial run_range(const BathEnsemble& b, double w, double tau, std::uint64_t begin,
                  std::uint64_t end) {
  const double r_min3 = b.r_min * b.r_min * b.r_min;
  const double r_max3 = b.r_max * b.r_max * b.r_max;
  const double coupling_scale = b.dipole_a * b.dipole_b / (4.0 * phys::pi * b.epsilon * phys::hbar);
  Partial p;
  for (std::uint64_t j = begin; j < end; ++j) {
    SplitMix64 g = substream(b.seed, j);
    double phase = 0.0;
    for (std::size_t k = 0; k < b.n_bath; ++k) {
      // Uniform density in the shell: r^3 uniform on [r_min^3, r_max^3].
      const double r3 = r_min3 + g.uniform01() * (r_max3 - r_min3);
      const double mu = 2.0 * g.uniform01() - 1.0;  // cos(theta)
      const double coupling = coupling_scale * (1.0 - 3.0 * mu * mu) / r3;
      phase += coupling * detail::telegraph_history(g, w, tau, 0.0);
    }
    const double v = std::cos(phase);
    p.sum += v;
    p.sum_sq += v * v;
  }
  return p;
}

}  // namespace

BathEnsemble make_bath(double density, double dipole_a, double dipole_b, double epsilon,
                       std::size_t n_bath, double r_min, std::uint64_t seed) {
  if (!(density > 0.0)) throw std::invalid_argument("make_bath: density must be > 0");
  BathEnsemble b;
  b.density = density;
  b.dipole_a = dipole_a;
  b.dipole_b = dipole_b;
  b.epsilon = epsilon;
  b.n_bath = n_bath;
  b.r_min = r_min;
  const double r_min3 = r_min * r_min * r_min;
  b.r_max = std::cbrt(r_min3 + 3.0 * static_cast<double>(n_bath) / (4.0 * phys::pi * density));
  b.seed = seed;
  validate(b);
  return b;
}

MonteCarloEstimate ensemble_echo(const BathEnsemble& bath, double jump_rate, double tau_s,
                                 std::size_t n_realizations, unsigned n_workers) {
  validate(bath);
  if (!(jump_rate >= 0.0) || !(tau_s >= 0.0)) {
    throw std::invalid_argument("ensemble_echo: jump_rate and tau must be >= 0");
  }
  if (n_realizations == 0) throw std::invalid_argument("ensemble_echo: n_realizations must be >= 1");

  const std::uint64_t n = n_realizations;
  std::uint64_t workers = n_workers == 0 ? 1 : n_workers;
  if (workers > n) workers = n;

  std::vector<Partial> partials(workers);
  if (workers == 1) {
    partials[0] = run_range(bath, jump_rate, tau_s, 0, n);
  } else {
    const std::uint64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t b = w * chunk;
      const std::uint64_t e = std::min<std::uint64_t>(n, b + chunk);
      pool.emplace_back([&, w, b, e] { partials[w] = run_range(bath, jump_rate, tau_s, b, e); });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0, sum_sq = 0.0;
  for (const auto& p : partials) {
    sum += p.sum;
    sum_sq += p.sum_sq;
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  double se = 0.0;
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - nd * mean * mean) / (nd - 1.0));
    se = std::sqrt(var / nd);
  }
  return {mean, se};
}

}  // namespace tlsecho
