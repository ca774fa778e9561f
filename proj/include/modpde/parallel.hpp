#pragma once

// Static-partition parallel loop. Work item i always lands in the same slot of
// the caller's output, so results do not depend on the thread count.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace modpde {

/// Calls fn(worker, i) for i in [0, n), items split into contiguous blocks over
/// at most `threads` workers. The first exception thrown by any worker is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(std::size_t{0}, i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i)
          fn(w, i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

/// Thread count from the environment variable, or 0 when unset or malformed.
inline unsigned threads_from_env(const char* value)
{
  if (!value || !*value)
    return 0;
  unsigned out = 0;
  for (const char* p = value; *p; ++p) {
    if (*p < '0' || *p > '9')
      return 0;
    out = out * 10 + static_cast<unsigned>(*p - '0');
    if (out > 4096)
      return 0;
  }
  return out;
}

} // namespace modpde
