#include "tlsecho/telegraph.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace tlsecho {
namespace {

void validate(const TelegraphConfig& cfg) {
  if (!(cfg.jump_rate >= 0.0) || !std::isfinite(cfg.jump_rate) ||
      !(cfg.tau_s >= 0.0) || !std::isfinite(cfg.tau_s) ||
      !(cfg.tau_prime_s >= 0.0) || !std::isfinite(cfg.tau_prime_s)) {
    throw std::invalid_argument("TelegraphConfig: rates and delays must be finite and >= 0");
  }
  if (cfg.n_histories < 1) {
    throw std::invalid_argument("TelegraphConfig: n_histories must be >= 1");
  }
}

struct Partial {
  double sum = 0.0;
  double sum_sq = 0.0;
};

Partial run_range(const TelegraphConfig& cfg, std::uint64_t begin, std::uint64_t end) {
  Partial p;
  for (std::uint64_t i = begin; i < end; ++i) {
    SplitMix64 g = substream(cfg.seed, i);
    const double v = std::abs(detail::telegraph_history(g, cfg.jump_rate, cfg.tau_s, cfg.tau_prime_s));
    p.sum += v;
    p.sum_sq += v * v;
  }
  return p;
}

}  // namespace

MonteCarloEstimate flip_history_average(const TelegraphConfig& cfg, unsigned n_workers) {
  validate(cfg);
  const std::uint64_t n = cfg.n_histories;
  std::uint64_t workers = n_workers == 0 ? 1 : n_workers;
  if (workers > n) workers = n;

  std::vector<Partial> partials(workers);
  if (workers == 1) {
    partials[0] = run_range(cfg, 0, n);
  } else {
    const std::uint64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t b = w * chunk;
      const std::uint64_t e = std::min(n, b + chunk);
      pool.emplace_back([&, w, b, e] { partials[w] = run_range(cfg, b, e); });
    }
    for (auto& t : pool) t.join();
  }

  // Merge in worker order: bit-identical for a fixed (seed, worker count).
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
