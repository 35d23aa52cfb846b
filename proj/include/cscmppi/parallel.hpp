#pragma once

#include <cstddef>

#include <functional>

namespace cscmppi::util {

// Process-wide cap on worker threads. 0 restores the hardware default.
void set_max_threads(int n);
int effective_threads();

// Runs fn(i) for i in [0, n) on a static contiguous partition. Every index
// is independent, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cscmppi::util
