#pragma once

#include <cstddef>
#include <functional>

namespace grunwald {

// Worker count: GRUNWALD_THREADS if set (clamped to >= 1), otherwise
// hardware concurrency. Read once per process.
int thread_count();

// Runs fn(i) for i in [0, count). Falls back to a plain loop when the
// pool would have one worker or the range is small. Exceptions from
// workers are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace grunwald
