#pragma once

#include <cstddef>
#include <functional>
#include <optional>

namespace xbar::bench {

/// Explicit request, else XBAR_BENCH_THREADS, else hardware concurrency (>= 1).
std::size_t resolve_threads(std::optional<std::size_t> requested);

/// Runs task(i) for i in [0, n) on up to `threads` workers. Tasks must write
/// only to their own slot. The first exception thrown by any task is
/// rethrown after all workers stop; remaining tasks are skipped.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace xbar::bench
