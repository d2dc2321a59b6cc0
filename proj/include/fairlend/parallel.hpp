#pragma once

#include <cstddef>
#include <functional>

namespace fairlend {

// Runs fn(0) .. fn(count-1) across at most `jobs` worker threads (serially
// when jobs <= 1). Tasks must write only to their own preallocated slots so
// results never depend on scheduling; the first exception thrown by any task
// is rethrown on the calling thread after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace fairlend
