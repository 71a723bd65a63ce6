#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seld {

struct ExecPolicy {
  unsigned threads = 1;

  static ExecPolicy hardware() {
    return {std::max(1u, std::thread::hardware_concurrency())};
  }
};

// Splits [0, n) into at most `threads` contiguous chunks and calls
// body(begin, end) for each. Chunk boundaries depend only on n and the thread
// count, and bodies never share output cells, so results are identical for
// any thread count.
template <typename Body>
void parallel_for(std::size_t n, const ExecPolicy& exec, Body&& body) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, exec.threads), n);
  if (workers == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = n * w / workers;
      const std::size_t end = n * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          body(begin, end);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seld
