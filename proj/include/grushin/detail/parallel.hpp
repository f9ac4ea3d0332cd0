#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace grushin {

/// Worker count for embarrassingly parallel loops. Results never depend on it.
struct Execution {
  std::size_t workers = 1;

  /// GRUSHIN_THREADS overrides `requested` when set to a positive integer.
  static Execution from_env(std::size_t requested = 1) {
    Execution e{std::max<std::size_t>(1, requested)};
    if (const char* env = std::getenv("GRUSHIN_THREADS")) {
      try {
        const long v = std::stol(env);
        if (v > 0) e.workers = static_cast<std::size_t>(v);
      } catch (...) {
      }
    }
    return e;
  }
};

namespace detail {

/// Calls fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception (lowest index) is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, const Execution& exec, Fn&& fn) {
  const std::size_t nthreads = std::min(exec.workers, count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, const Execution& exec, Fn&& fn) {
  std::vector<T> out(count);
  parallel_for(count, exec, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace detail
}  // namespace grushin
