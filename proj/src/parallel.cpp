#include "cpt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cpt {

namespace {

std::atomic<std::size_t> g_workers{0};
thread_local bool t_inside_worker = false;

} // namespace

void set_worker_count(std::size_t workers) { g_workers.store(workers); }

std::size_t worker_count()
{
  const std::size_t w = g_workers.load();
  if (w != 0)
    return w;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1 || t_inside_worker) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::size_t error_index = n;
  std::mutex error_mutex;

  auto run = [&] {
    t_inside_worker = true;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load())
        break;
      try {
        body(i);
      } catch (...) {
        // Indices are claimed in increasing order, so every index below a
        // failing one also runs; keeping the lowest makes the error stable.
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error = std::current_exception();
          error_index = i;
        }
        failed.store(true);
      }
    }
    t_inside_worker = false;
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
      pool.emplace_back(run);
    run();
  }
  if (error)
    std::rethrow_exception(error);
}

} // namespace cpt
