#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace rswarm {

/// Number of reduction chunks used by every pairwise sum. Fixed, so partial sums
/// are combined in the same order whatever the worker count.
inline constexpr std::size_t kReductionChunks = 16;

struct ChunkRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Contiguous row ranges of [0, n) carrying roughly equal numbers of pairs
/// (i, j > i) each. Empty ranges are kept so the chunk count never changes.
inline std::vector<ChunkRange> triangular_chunks(std::size_t n, std::size_t chunks = kReductionChunks) {
  std::vector<ChunkRange> out(chunks);
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0);
  std::size_t row = 0;
  double acc = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    out[c].begin = row;
    const double target = total * static_cast<double>(c + 1) / static_cast<double>(chunks);
    while (row < n && acc < target) {
      acc += static_cast<double>(n - 1 - row);
      ++row;
    }
    out[c].end = row;
  }
  out.back().end = n;
  return out;
}

/// Equal-length contiguous ranges of [0, n).
inline std::vector<ChunkRange> even_chunks(std::size_t n, std::size_t chunks = kReductionChunks) {
  std::vector<ChunkRange> out(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    out[c].begin = n * c / chunks;
    out[c].end = n * (c + 1) / chunks;
  }
  return out;
}

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(c, ranges[c]) for every chunk, spread over `threads` workers
/// (0 = hardware concurrency). fn must only write chunk-private state.
template <class Fn>
void for_each_chunk(std::span<const ChunkRange> ranges, unsigned threads, Fn&& fn) {
  const unsigned workers = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(ranges.size()));
  if (workers <= 1) {
    for (std::size_t c = 0; c < ranges.size(); ++c) fn(c, ranges[c]);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < ranges.size(); c += workers) fn(c, ranges[c]);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

} // namespace rswarm
