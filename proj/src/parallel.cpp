#include "dml/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace dml {
namespace {

std::atomic<std::size_t> g_max_workers{1};
thread_local bool t_in_parallel_region = false;

}  // namespace

void set_max_workers(std::size_t workers) { g_max_workers = std::max<std::size_t>(1, workers); }

std::size_t max_workers() { return g_max_workers; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(g_max_workers.load(), n);
  if (workers <= 1 || t_in_parallel_region) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    t_in_parallel_region = true;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    t_in_parallel_region = false;
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace dml
