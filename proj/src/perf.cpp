#include "wavblur/perf.hpp"

namespace wavblur {
namespace perf {

std::atomic<std::uint64_t> madds{0};

}  // namespace perf
}  // namespace wavblur
