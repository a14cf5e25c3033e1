#ifndef DISTCAUSE_THREADS_HPP
#define DISTCAUSE_THREADS_HPP

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace distcause {

// Worker cap: DISTCAUSE_THREADS if set, else available parallelism.
inline int default_threads() {
  if (const char* env = std::getenv("DISTCAUSE_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Run fn(i) for i in [0, n) on up to `threads` workers. Callers own result
// slots indexed by i, so scheduling order never affects output. Exceptions
// are captured and rethrown on the calling thread.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = default_threads();
  if (n <= 0) return;
  if (threads == 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto worker = [&] {
    int i;
    while ((i = next.fetch_add(1)) < n) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int w = std::min(threads, n);
  pool.reserve(w);
  for (int t = 0; t < w; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace distcause

#endif  // DISTCAUSE_THREADS_HPP
