#pragma once

#include <cstddef>
#include <functional>

namespace easiernet {

/// Worker count for parallel maps: EASIERNET_THREADS if set to a positive
/// integer, otherwise the hardware concurrency (at least 1).
std::size_t thread_cap();

/// Runs body(i) for i in [0, count). Each index runs exactly once; callers
/// write results into slot i so the outcome does not depend on scheduling.
/// The first exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace easiernet
