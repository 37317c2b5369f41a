#include "eit3d/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace eit3d {

int worker_count() {
  if (const char* env = std::getenv("EIT3D_WORKERS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  int nw = worker_count();
  if (nw <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  nw = std::min<std::size_t>(nw, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&, w]() {
      // contiguous static chunks
      std::size_t chunk = (n + nw - 1) / nw;
      std::size_t lo = static_cast<std::size_t>(w) * chunk;
      std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace eit3d
