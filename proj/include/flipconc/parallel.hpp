#pragma once

#include <cstddef>
#include <functional>

namespace flipconc {

/// Number of workers used by parallel_for. Defaults to FLIPCONC_WORKERS
/// from the environment, else std::thread::hardware_concurrency().
std::size_t worker_count();
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n) over worker_count() threads with static
/// contiguous chunking. body must only write to slots owned by index i;
/// callers reduce the per-index results afterwards in index order, which
/// keeps every reduction independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace flipconc
