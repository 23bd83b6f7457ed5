#pragma once

#include <cstddef>
#include <functional>

namespace tiltlik {

/// Number of worker threads for a request: values < 1 mean "all hardware threads".
int resolve_threads(int requested);

/// Calls body(i) for i in [0, n) on up to `threads` threads. Indices are
/// handed out in contiguous blocks; results must be written to per-index
/// slots so the outcome never depends on scheduling. The first exception
/// thrown by any body is rethrown after all threads finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace tiltlik
