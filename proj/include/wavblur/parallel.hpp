#pragma once

#include <cstddef>
#include <functional>

namespace wavblur {

// Process-wide cap on worker threads (CLI --threads). 0 means use all
// hardware threads. Results never depend on the thread count: work items
// write disjoint slots and merges happen in index order.
void set_max_threads(unsigned n);
unsigned max_threads();

// Runs fn(i) for i in [0, count) on up to max_threads() threads with static
// chunking. Falls back to a plain loop when one thread suffices.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace wavblur
