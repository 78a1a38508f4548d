#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace vss {

inline int default_thread_count() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Static block partition: block boundaries depend only on (n, block), never on
// the thread count, so per-block results reduced in block order give
// bit-identical sums for any --threads value. body(block_index, begin, end)
// must not throw and must write only to its own slots.
template <class Body>
void parallel_for_blocks(std::int64_t n, std::int64_t block, int threads, Body&& body) {
  if (n <= 0) return;
  block = std::max<std::int64_t>(1, block);
  const std::int64_t n_blocks = (n + block - 1) / block;
  const int t_use = static_cast<int>(std::max<std::int64_t>(
      1, std::min<std::int64_t>(static_cast<std::int64_t>(std::max(1, threads)), n_blocks)));
  if (t_use == 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b)
      body(b, b * block, std::min(n, (b + 1) * block));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t_use);
  for (int t = 0; t < t_use; ++t) {
    pool.emplace_back([&, t] {
      for (std::int64_t b = t; b < n_blocks; b += t_use)
        body(b, b * block, std::min(n, (b + 1) * block));
    });
  }
  for (auto& th : pool) th.join();
}

} // namespace vss
