#include "xbar/bench/worker_pool.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string_view>
#include <thread>
#include <vector>

#include "xbar/bench/config.hpp"

namespace xbar::bench {

std::size_t resolve_threads(std::optional<std::size_t> requested) {
  if (requested) {
    if (*requested == 0) throw ConfigError("threads must be >= 1");
    return *requested;
  }
  if (const char* env = std::getenv("XBAR_BENCH_THREADS"); env && *env) {
    const std::string_view s(env);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc{} || ptr != s.data() + s.size() || n == 0)
      throw ConfigError("XBAR_BENCH_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return n;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n && !failed; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (first) std::rethrow_exception(first);
}

}  // namespace xbar::bench
