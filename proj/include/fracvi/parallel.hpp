#pragma once

#include <cstddef>
#include <functional>

namespace fracvi {

/// Worker cap: FRACVI_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. Each index writes only
/// its own output slot; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fracvi
