#pragma once

// Fixed-chunk parallel loops. Work is split into kChunks pieces regardless of
// the thread count, and reductions combine chunk results in chunk order, so
// results are bitwise independent of the number of threads.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace anicap {

inline constexpr int kChunks = 64;

inline void parallel_chunks(int threads, std::size_t n,
                            const std::function<void(int, std::size_t, std::size_t)>& body) {
  auto range = [n](int c) {
    return std::pair<std::size_t, std::size_t>{n * c / kChunks, n * (c + 1) / kChunks};
  };
  if (threads <= 1) {
    for (int c = 0; c < kChunks; ++c) {
      const auto [b, e] = range(c);
      body(c, b, e);
    }
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, kChunks); ++t) {
    pool.emplace_back([&] {
      for (int c = next++; c < kChunks; c = next++) {
        const auto [b, e] = range(c);
        body(c, b, e);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline void parallel_for(int threads, std::size_t n, const std::function<void(std::size_t)>& body) {
  parallel_chunks(threads, n, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) body(i);
  });
}

/// Deterministic sum of f(i) over [0, n).
inline double parallel_sum(int threads, std::size_t n, const std::function<double(std::size_t)>& f) {
  std::vector<double> partial(kChunks, 0.0);
  parallel_chunks(threads, n, [&](int c, std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t i = b; i < e; ++i) s += f(i);
    partial[c] = s;
  });
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace anicap
