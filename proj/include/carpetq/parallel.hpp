#pragma once

#include <cstddef>
#include <functional>

namespace carpetq {

// Number of worker threads to use for `requested` (0 means hardware concurrency).
unsigned resolve_threads(unsigned requested);

// Runs task(i) for i in [0, count) on up to `threads` workers. Tasks must write only to
// their own slot; callers merge per-task results in index order, which keeps every
// result independent of the thread count. The first exception thrown by a task is
// rethrown after all workers stop.
void run_tasks(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& task);

}  // namespace carpetq
