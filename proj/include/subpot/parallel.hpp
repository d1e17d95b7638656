#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace subpot {

/// Worker count: SUBPOT_THREADS if set and positive, else hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("SUBPOT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// out[i] = f(i) for i in [0, n). Static contiguous chunks, so every element
/// is computed identically regardless of the thread count.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f, int threads = 0) {
  std::vector<T> out(n);
  if (threads <= 0) threads = thread_count();
  std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

/// Pairwise sum in a fixed order.
inline double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace subpot
