#pragma once

#include <cstddef>
#include <functional>

namespace stcsense {

// Worker count used by parallel_for. Defaults to hardware concurrency; STCSENSE_THREADS overrides.
unsigned worker_count();
void set_worker_count(unsigned n);

// Runs body(i) for i in [0, n) across worker threads with a static contiguous partition.
// Each index is processed exactly once; callers write to disjoint outputs, so results do not
// depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stcsense
