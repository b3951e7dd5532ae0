#pragma once

#include <atomic>
#include <cstdint>

namespace wavblur {

// Process-wide multiply-add counter. Numeric kernels add their op counts in
// bulk (once per pass, not per scalar), so the instrumentation is effectively
// free and the counts are exact and deterministic.
namespace perf {

extern std::atomic<std::uint64_t> madds;

inline void count_madds(std::uint64_t n) {
    madds.fetch_add(n, std::memory_order_relaxed);
}

inline std::uint64_t read_madds() { return madds.load(std::memory_order_relaxed); }
inline void reset_madds() { madds.store(0, std::memory_order_relaxed); }

}  // namespace perf
}  // namespace wavblur
