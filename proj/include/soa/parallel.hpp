#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace soa {

// Runs fn(begin, end) over disjoint chunks of [0, n), on `threads` workers.
// Callers own determinism: chunks write to disjoint slots only.
template <typename F>
void parallel_chunks(std::uint64_t n, int threads, F&& fn) {
  if (threads <= 1 || n < 2) {
    if (n > 0) fn(std::uint64_t{0}, n);
    return;
  }
  const std::uint64_t workers = std::min<std::uint64_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t chunk = (n + workers - 1) / workers;
  for (std::uint64_t w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace soa
