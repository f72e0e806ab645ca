#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cubeavg {

// Worker count for internal kernels. CUBEAVG_WORKERS overrides; otherwise the
// hardware count, capped. Results never depend on this value: every block is
// computed by exactly one worker and reduced in block order.
inline int worker_count() {
  if (const char* env = std::getenv("CUBEAVG_WORKERS")) {
    int w = std::atoi(env);
    if (w >= 1) return std::min(w, 64);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

// Runs fn(block) for block = 0..nblocks-1. fn must write only to state owned
// by its block (typically a slot in a pre-sized vector); the caller reduces
// the slots sequentially afterwards.
template <typename Fn>
void parallel_for_blocks(std::size_t nblocks, Fn&& fn) {
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), nblocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t b = next.fetch_add(1);
        if (b >= nblocks) break;
        fn(b);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cubeavg
