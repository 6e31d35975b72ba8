#pragma once

#include <cstddef>
#include <functional>

namespace ncouple {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// executed exactly once; with threads <= 1 everything runs on the caller.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Worker cap from NCA_THREADS, falling back to hardware concurrency.
unsigned default_thread_count();

}  // namespace ncouple
