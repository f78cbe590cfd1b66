#pragma once

// Deterministic block-parallel Monte Carlo driver.
//
// Work is cut into fixed-size blocks; block b always draws from a generator
// seeded by derive_seed(seed, b), and partial results are folded in block
// order. The output therefore does not depend on the number of workers.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace isac {

/// SplitMix64 finaliser applied to (seed, stream): decorrelates nearby seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kTrialsPerBlock = 4096;

inline unsigned default_worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs `block_fn(gen, first_trial, count)` over all blocks and folds the
/// returned partials with `Partial::merge` in block order.
template <class Partial, class BlockFn>
Partial run_blocks(std::uint64_t num_trials, std::uint64_t seed, unsigned workers, BlockFn&& block_fn) {
  const std::uint64_t num_blocks = (num_trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<Partial> partials(num_blocks);
  auto run_one = [&](std::uint64_t b) {
    std::mt19937_64 gen(derive_seed(seed, b));
    const std::uint64_t first = b * kTrialsPerBlock;
    const std::uint64_t count = std::min(kTrialsPerBlock, num_trials - first);
    partials[b] = block_fn(gen, first, count);
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(num_blocks, 1))));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < num_blocks; ++b) run_one(b);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::uint64_t b = w; b < num_blocks; b += workers) run_one(b);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  Partial total{};
  for (const auto& p : partials) total.merge(p);
  return total;
}

}  // namespace isac
