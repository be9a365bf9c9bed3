#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sppm {

namespace detail {
inline std::atomic<unsigned>& worker_setting() {
  static std::atomic<unsigned> n{1};
  return n;
}
}  // namespace detail

/// Global worker count used by every parallel loop. Defaults to 1.
inline void set_threads(unsigned n) { detail::worker_setting() = std::max(1U, n); }
inline unsigned threads() { return detail::worker_setting().load(); }

/// Calls fn(i) for every i in [0, count). fn must only write state owned by index i,
/// so the result is independent of the worker count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(threads(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Pairwise reduction over adjacent elements; fixed shape for a given size.
template <class T, class Op>
T tree_reduce(std::vector<T> v, Op op, T empty) {
  if (v.empty()) return empty;
  while (v.size() > 1) {
    std::vector<T> next;
    next.reserve((v.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) next.push_back(op(v[i], v[i + 1]));
    if (v.size() % 2 == 1) next.push_back(v.back());
    v = std::move(next);
  }
  return v.front();
}

}  // namespace sppm
