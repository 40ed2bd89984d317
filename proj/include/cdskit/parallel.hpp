#pragma once

#include <cstddef>
#include <functional>

namespace cdskit {

/// Worker count: hardware concurrency, capped by CDSKIT_THREADS when set.
std::size_t worker_count();

/// Runs body(i) for i in [0, count). Each index is handled exactly once and
/// callers write to disjoint slots, so results do not depend on scheduling.
/// The first exception thrown by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cdskit
