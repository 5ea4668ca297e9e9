#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace aesthete {

/// Worker count used by pixel loops. 1 (the default) runs everything on the
/// calling thread. Results never depend on this value: loops only write
/// disjoint rows and reductions combine per-row partials in row order.
void set_thread_count(int threads) noexcept;
int thread_count() noexcept;

/// Invokes fn(row_begin, row_end) over [0, rows) in contiguous blocks.
template <typename Fn>
void parallel_rows(int rows, Fn&& fn) {
  const int workers = std::min(thread_count(), rows);
  if (workers <= 1) {
    fn(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  const int block = (rows + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    const int begin = w * block;
    const int end = std::min(rows, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(rows, block));
}

}  // namespace aesthete
