#pragma once

#include <cstddef>
#include <functional>

namespace pglab {

/// Worker count: explicit value if > 0, else PG_LAB_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers. Results must be keyed by i.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace pglab
