#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace snsim {

// Static block partition over [0, n); each index writes only its own slot, so
// results are independent of the thread count and reductions stay in index
// order.
inline void parallel_for_index(std::size_t n, int threads,
                               const std::function<void(std::size_t)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  const std::size_t workers = std::min<std::size_t>(threads, n ? n : 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace snsim
