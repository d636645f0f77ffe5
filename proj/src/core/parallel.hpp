// parallel.hpp: minimal work-item parallelism for the convolution loops.
//
// Work is split into independent items; each item writes a disjoint output
// region with a fixed internal accumulation order, so results are
// bit-identical for every thread count.
#pragma once

#include <cstdint>
#include <functional>

namespace pairloc {

/// Set the worker count used by parallel_for. 0 restores the hardware default.
void set_thread_count(int n);
int thread_count();

/// Run fn(i) for i in [0, n). Items may execute on any worker in any order.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace pairloc
