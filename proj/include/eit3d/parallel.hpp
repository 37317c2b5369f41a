#pragma once

#include <cstddef>
#include <functional>

namespace eit3d {

// Number of worker threads: EIT3D_WORKERS env var, else hardware concurrency.
int worker_count();

// Static-partition parallel loop over [0, n). Each index is processed exactly
// once by exactly one worker; results must be written to disjoint slots so the
// outcome is independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace eit3d
