#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace comets {

namespace detail {

inline std::atomic<std::size_t>& max_threads_setting() {
  static std::atomic<std::size_t> value{std::max<std::size_t>(1, std::thread::hardware_concurrency())};
  return value;
}

inline bool& inside_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

}  // namespace detail

// Worker cap for every internal parallel loop. Results never depend on it.
inline void set_max_threads(std::size_t n) { detail::max_threads_setting() = std::max<std::size_t>(1, n); }
inline std::size_t max_threads() { return detail::max_threads_setting(); }

// Restores the previous worker cap on scope exit.
class ThreadLimit {
 public:
  explicit ThreadLimit(std::size_t n) : previous_(max_threads()) { set_max_threads(n); }
  ~ThreadLimit() { set_max_threads(previous_); }
  ThreadLimit(const ThreadLimit&) = delete;
  ThreadLimit& operator=(const ThreadLimit&) = delete;

 private:
  std::size_t previous_;
};

// Calls fn(i) for i in [0, count). Work is pulled dynamically, so every fn(i)
// must write only to its own slot. Nested calls run serially. If any call
// throws, the exception of the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min(max_threads(), count);
  if (workers <= 1 || detail::inside_parallel_region()) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto body = [&] {
    detail::inside_parallel_region() = true;
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    detail::inside_parallel_region() = false;
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace comets
