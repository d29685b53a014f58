#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace attn_audit {

// Worker count from ATTN_AUDIT_THREADS (0 or unset = hardware concurrency).
std::size_t configured_threads();

// Applies fn(i) for i in [0, n) across worker threads and returns results in
// index order. If several calls throw, the exception from the lowest index is
// rethrown, so failures are reported the same way regardless of scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn, std::size_t threads = configured_threads())
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<Result>> slots(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      pool.emplace_back(run_range, begin, std::min(n, begin + chunk));
    }
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace attn_audit
