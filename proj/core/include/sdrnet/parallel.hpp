#pragma once

#include <cstddef>
#include <functional>

namespace sdrnet {

// Worker count used by parallel_for. Defaults to the hardware concurrency;
// set_parallel_threads(1) forces serial execution. Changing the count never
// changes results: only the partitioning of work varies.
int parallel_threads();
void set_parallel_threads(int n);

/// Runs fn(begin, end) over a partition of [0, n) into contiguous ranges, at
/// most one per worker and none shorter than grain. Every index belongs to
/// exactly one range, so fn may write to per-index output slots without
/// synchronization and the combined result is identical for any thread count.
/// Blocks until all ranges are done. Exceptions thrown by fn are rethrown on
/// the calling thread (the first one, by range order).
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sdrnet
