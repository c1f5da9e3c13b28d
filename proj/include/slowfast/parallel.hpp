#pragma once

#include <cstdint>
#include <functional>

namespace slowfast {

// Worker count: SLOWFAST_THREADS when set, otherwise hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n) across workers. Tasks must write only to
// storage indexed by i, so results are independent of scheduling; callers
// reduce sequentially afterwards.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace slowfast
