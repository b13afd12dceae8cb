#pragma once

#include <cstddef>
#include <functional>

namespace exhaust::tools {

/// Runs task(i) for i in [0, count) on up to `threads` threads (0 picks the
/// hardware concurrency). Each index runs exactly once; the first exception
/// is rethrown after all threads finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace exhaust::tools
