#pragma once

#include <cstddef>
#include <functional>

namespace matforge {

// Number of workers used when a caller passes threads == 0.
unsigned default_thread_count() noexcept;

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default).
// Work is handed out in contiguous index blocks; callers must make body(i)
// depend only on i so that results do not depend on the worker count.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace matforge
