#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mfsol {

/// Worker cap from MFSOL_THREADS (default 1).
inline unsigned thread_count() {
  const char* env = std::getenv("MFSOL_THREADS");
  if (!env) return 1;
  try {
    long n = std::stol(env);
    if (n < 1) return 1;
    return unsigned(std::min<long>(n, std::max(1u, std::thread::hardware_concurrency())));
  } catch (...) {
    return 1;
  }
}

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint so
/// results do not depend on the partition.
template <class F>
void parallel_for(std::size_t n, F&& fn, std::size_t min_chunk = 64) {
  unsigned nt = thread_count();
  if (nt <= 1 || n < 2 * min_chunk) {
    fn(std::size_t(0), n);
    return;
  }
  nt = unsigned(std::min<std::size_t>(nt, n / min_chunk));
  std::vector<std::thread> pool;
  std::size_t chunk = (n + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    std::size_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mfsol
