#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace mvdepth {

// Worker cap for parallel_for. 0 means hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Calls fn(i) for i in [begin, end) across contiguous chunks. fn must only
// write state owned by index i; nothing is reduced here, so results do not
// depend on the thread count.
template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int workers = std::min(num_threads(), n);
  if (workers <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mvdepth
