#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <thread>
#include <vector>

namespace rtggm::detail {

// Contiguous chunks [begin,end) per worker slot; with threads <= 1 the whole
// range runs inline in slot 0. Callers combine per-slot results in slot
// order, so the reduction order is fixed for a given thread count.
template <typename Work>
void run_chunked(Eigen::Index total, int threads, Work&& work) {
  if (threads <= 1 || total <= 1) {
    work(Eigen::Index{0}, total, 0);
    return;
  }
  const Eigen::Index t = std::min<Eigen::Index>(threads, total);
  const Eigen::Index chunk = (total + t - 1) / t;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  for (Eigen::Index w = 0; w < t; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&work, begin, end, w] { work(begin, end, static_cast<int>(w)); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace rtggm::detail
