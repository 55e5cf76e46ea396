#pragma once

#include <cstddef>
#include <functional>

namespace mv3dis {

// Worker count used by parallel_for. 0 means "use hardware concurrency".
// Results must be identical for every setting: parallel sections only ever
// perform disjoint writes, reductions stay sequential.
void set_worker_threads(int n);
int worker_threads();
int effective_worker_threads();

// Runs fn(i) for i in [0, n). Blocks until done. Exceptions from workers are
// rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mv3dis
