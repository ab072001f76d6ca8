#pragma once

#include <cstddef>
#include <functional>

namespace sketchreg {

/// Process-wide cap on worker threads (CLI --threads). 0 means "hardware
/// concurrency". Results never depend on this value: parallel loops write to
/// per-index slots and reduce serially in index order.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, n). Work items must be independent. Exceptions are
/// collected and the one with the lowest index is rethrown after all workers
/// join, so failure behaviour is also scheduling-independent. Nested calls run
/// serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace sketchreg
