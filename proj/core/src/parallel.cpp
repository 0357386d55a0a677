#include "admgs/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace admgs {

namespace {
std::atomic<int> g_thread_cap{0};

int resolve_threads() {
  int cap = g_thread_cap.load();
  if (cap <= 0) {
    if (const char* env = std::getenv("ADMGS_THREADS")) {
      cap = std::atoi(env);
    }
  }
  if (cap <= 0) {
    cap = int(std::thread::hardware_concurrency());
  }
  return std::max(1, cap);
}
}  // namespace

void set_thread_cap(int threads) { g_thread_cap.store(threads); }

int thread_cap() { return g_thread_cap.load(); }

int effective_threads() {
  const int n = resolve_threads();
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
  return n;
}

void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn) {
  if (n == 0 || chunk == 0) return;
  const std::size_t chunks = chunk_count(n, chunk);
  const int threads = effective_threads();
  if (threads <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      fn(c, c * chunk, std::min(n, (c + 1) * chunk));
    }
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (long long c = 0; c < (long long)chunks; ++c) {
    fn(std::size_t(c), std::size_t(c) * chunk,
       std::min(n, (std::size_t(c) + 1) * chunk));
  }
#else
  for (std::size_t c = 0; c < chunks; ++c) {
    fn(c, c * chunk, std::min(n, (c + 1) * chunk));
  }
#endif
}

}  // namespace admgs
