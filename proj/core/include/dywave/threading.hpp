#pragma once

#include <cstddef>
#include <functional>

namespace dywave {

// Worker cap: DYWAVE_THREADS if set (>= 1), otherwise the hardware count.
std::size_t thread_count();

// Runs fn(i) for i in [0, n) across at most thread_count() workers with
// static chunking. Callers that aggregate must do so in index order after
// the loop; the loop itself promises nothing about ordering.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace dywave
