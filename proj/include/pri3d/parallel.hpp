#pragma once

#include <cstddef>
#include <functional>

namespace pri3d {

/// Worker count: the explicit override if set, else PRI3D_THREADS, else
/// hardware concurrency. Always >= 1.
std::size_t ThreadCount();

/// Overrides the worker count for this process; 0 restores the default.
void SetThreadCount(std::size_t n);

/// Splits [0, n) into contiguous blocks, one per worker, and runs
/// body(begin, end) on each. Blocks never overlap, so bodies that write
/// only to their own index range produce results independent of the
/// worker count. Calls made from inside a worker run serially.
void ParallelFor(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace pri3d
