#pragma once

#include <cstdint>
#include <functional>

namespace skloc {

// Worker count used by parallel_for. Resolution order: value set by
// set_thread_count, else the SKLOC_THREADS environment variable, else the
// hardware concurrency. Always at least 1.
int thread_count();

// Override the worker count (n >= 1); n = 0 restores the default resolution.
void set_thread_count(int n);

// Runs body(i) for i in [0, count) across thread_count() workers pulling from
// a shared atomic index. Iterations must write disjoint slots; under that
// discipline results are bitwise independent of the worker count. The first
// exception thrown by any iteration is rethrown on the calling thread after
// all workers join.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& body);

}  // namespace skloc
