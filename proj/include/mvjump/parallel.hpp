#pragma once

#include <cstddef>
#include <functional>

namespace mvjump {

int thread_count();
void set_thread_count(int n);

/// Runs fn(i) for i in [0, n), split over the configured thread count.
/// Contract: fn(i) writes only to slot i of its outputs. Reductions stay with
/// the caller (serial, index order), so results never depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mvjump
