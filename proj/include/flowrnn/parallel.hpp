#pragma once

#include <cstddef>
#include <functional>

namespace flowrnn {

// Runs fn(0..n-1) on up to `threads` workers (0 = hardware concurrency).
// Work items must be independent; exceptions are rethrown on the caller.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

int resolve_threads(int requested);

}  // namespace flowrnn
