#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace limsup {

// LIMSUP_LAB_THREADS caps worker threads; defaults to hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("LIMSUP_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Runs fn(0..jobs-1) across workers. Each job writes only its own slot, so
// results are independent of scheduling; callers merge in index order.
inline void parallel_for_jobs(int jobs, const std::function<void(int)>& fn) {
  const int workers = std::min(jobs, max_threads());
  if (workers <= 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) fn(j);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace limsup
