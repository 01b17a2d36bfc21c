#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <vector>

namespace tse {

// Run fn(lo, hi) over [0, count) split across `threads` async workers.
// The chunking depends only on (count, threads), so work that writes to
// disjoint index ranges produces identical results for any thread count.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t workers = std::min(threads, count);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    futures.push_back(std::async(std::launch::async, [&fn, lo, hi] { fn(lo, hi); }));
  }
  for (auto& f : futures) f.get();
}

}  // namespace tse
