#pragma once

#include <cstddef>
#include <functional>

namespace transposer {

// Width of the data-parallel pool: TRANSPOSER_THREADS if set (0 = auto),
// otherwise the hardware concurrency.
int parallel_width();

// Runs fn(i) for i in [0, count). Work is split into contiguous blocks;
// callers that accumulate must do so per-index (or per fixed block) so the
// result does not depend on the schedule.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace transposer
