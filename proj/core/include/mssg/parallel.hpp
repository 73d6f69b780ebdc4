#pragma once

#include <cstddef>
#include <functional>

namespace mssg {

/// Worker count: `requested` if positive, otherwise the hardware
/// concurrency; always capped by MSSG_THREADS when that is set.
int worker_count(int requested = 0);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Exceptions are
/// rethrown on the calling thread (the one from the lowest index wins).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

}  // namespace mssg
