#include "mv3dis/parallel.h"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace mv3dis {

namespace {
std::atomic<int> g_worker_threads{0};
}

void set_worker_threads(int n) { g_worker_threads.store(n < 0 ? 0 : n); }

int worker_threads() { return g_worker_threads.load(); }

int effective_worker_threads() {
  int n = g_worker_threads.load();
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (n <= 0) n = 1;
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t num_threads =
      std::min<std::size_t>(static_cast<std::size_t>(effective_worker_threads()), n);
  if (num_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(num_threads - 1);
  for (std::size_t t = 0; t + 1 < num_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace mv3dis
