#pragma once

#include <cstddef>
#include <functional>

namespace seqkernel {

// Runs fn(0..count-1) on at most `threads` workers. Each index writes its own
// output slot, so results never depend on scheduling. The exception from the
// lowest failing index is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace seqkernel
