#pragma once

#include <cstddef>
#include <functional>

namespace admgs {

// Global worker-pool cap. 0 means "hardware default". Set from the CLI
// --threads flag or the ADMGS_THREADS environment variable.
void set_thread_cap(int threads);
int thread_cap();

// Resolves the cap (querying ADMGS_THREADS / hardware when unset) and
// applies it to the OpenMP runtime. Returns the effective thread count.
int effective_threads();

// Parallel loop over [0, n) in fixed-size chunks. Chunks are distributed
// across threads dynamically, but chunk boundaries depend only on
// (n, chunk). Reductions that accumulate per chunk and merge in chunk
// order are therefore bitwise reproducible for any thread count.
void parallel_chunks(std::size_t n, std::size_t chunk,
                     const std::function<void(std::size_t chunk_index,
                                              std::size_t begin,
                                              std::size_t end)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) {
  return chunk == 0 ? 0 : (n + chunk - 1) / chunk;
}

}  // namespace admgs
