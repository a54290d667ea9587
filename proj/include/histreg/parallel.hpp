#pragma once

#include <cstddef>
#include <functional>

namespace histreg {

// Process-wide cap on worker threads. Initialized from HISTREG_THREADS when
// set, otherwise hardware concurrency. A cap of 1 runs everything inline.
std::size_t thread_cap();
void set_thread_cap(std::size_t n);

// Runs body(i) for i in [0, n) over contiguous static chunks. body must only
// write to state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

}  // namespace histreg
