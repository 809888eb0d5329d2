#pragma once

#include <functional>

namespace procams {

/// Worker count: PROCAMS_THREADS if set and positive, otherwise hardware concurrency.
int thread_count();

/// Runs body(i) for i in [0, n) split into contiguous chunks across worker threads.
/// Bodies must only write disjoint state.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace procams
