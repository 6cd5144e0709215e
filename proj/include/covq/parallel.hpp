// SPDX-License-Identifier: Apache-2.0

#ifndef COVQ_PARALLEL_HPP
#define COVQ_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace covq {

// Worker count: min(COVQ_THREADS, hardware_concurrency), at least 1.
std::size_t worker_count();

// Splits [0, n) into contiguous chunks and runs body(chunk_index, begin, end)
// on a small thread pool. Chunk boundaries are independent of the number of
// workers, so per-chunk partial results can be reduced in index order to keep
// floating-point sums bit-stable.
void parallel_chunks(std::size_t n,
                     std::size_t n_chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

} // namespace covq

#endif
