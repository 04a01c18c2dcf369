#pragma once

#include <cstdint>
#include <functional>

namespace volsr {

/// Set the worker count for parallel_for. 0 restores the hardware default.
void set_thread_count(int n);
int thread_count();

/// Run fn(begin, end) over disjoint contiguous chunks of [0, n). Each index
/// is processed by exactly one worker and every worker iterates its chunk in
/// increasing order, so any computation with per-index outputs is bitwise
/// independent of the worker count.
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)> &fn);

} // namespace volsr
