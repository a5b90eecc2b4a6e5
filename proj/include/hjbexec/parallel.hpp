#pragma once

#include <cstddef>
#include <functional>

namespace hjbexec {

/// Worker count: `requested` if > 0, else HJB_EXEC_THREADS if set and > 0,
/// else hardware concurrency (at least 1).
int resolve_threads(int requested = 0);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work is handed out
/// in contiguous blocks; the first exception is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace hjbexec
