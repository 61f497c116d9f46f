#pragma once

#include <cstddef>
#include <functional>

namespace kreg {

/// Number of worker threads used by the library's parallel loops.
/// Initialised from the KREG_THREADS environment variable, otherwise 1.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Splits [0, n) into contiguous blocks and runs `body(begin, end)` on each.
/// Blocks never overlap, so per-index work that writes only its own outputs
/// produces the same result for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kreg
