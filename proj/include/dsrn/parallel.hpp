#pragma once

#include <thread>

#include "dsrn/common.hpp"

namespace dsrn {

/// Runs chunks [begin, end) of 0..count and combines per-chunk results in
/// chunk order. Chunk boundaries are fixed by `chunks`, not by the thread
/// count, so floating-point reductions are bit-reproducible on any
/// machine.
///
/// work(chunk_index, begin, end) -> T;  combine(T& acc, T&& part)
template <typename T, typename Work, typename Combine>
T chunked_reduce(std::int64_t count, int chunks, Work&& work, Combine&& combine, T init = {}) {
  chunks = std::max(1, std::min<int>(chunks, static_cast<int>(std::min<std::int64_t>(count, 1 << 14))));
  std::vector<T> parts(chunks);
  unsigned hw = std::thread::hardware_concurrency();
  int workers = static_cast<int>(std::min<unsigned>(hw ? hw : 1, chunks));
  if (workers <= 1) {
    for (int c = 0; c < chunks; ++c) {
      std::int64_t b = count * c / chunks, e = count * (c + 1) / chunks;
      parts[c] = work(c, b, e);
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (;;) {
          int c = next.fetch_add(1);
          if (c >= chunks) return;
          std::int64_t b = count * c / chunks, e = count * (c + 1) / chunks;
          parts[c] = work(c, b, e);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  T acc = std::move(init);
  for (auto& p : parts) combine(acc, std::move(p));
  return acc;
}

}  // namespace dsrn
