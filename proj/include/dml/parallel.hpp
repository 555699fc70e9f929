#pragma once

#include <cstddef>
#include <functional>

namespace dml {

/// Process-wide cap on worker threads (default 1). Results of every parallel
/// region are reduced in index order, so the cap never changes outputs.
void set_max_workers(std::size_t workers);
std::size_t max_workers();

/// Runs body(i) for i in [0, n). Nested calls execute serially on the calling
/// thread. If any iteration throws, the exception from the lowest index is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dml
