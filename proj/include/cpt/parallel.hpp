#pragma once

#include <cstddef>
#include <functional>

namespace cpt {

/// Caps the number of worker threads used by parallel_for. 0 restores the
/// default (hardware concurrency).
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Calls body(i) for every i in [0, n). Iterations must be independent; each
/// one should write only to its own output slot. A parallel_for issued from
/// inside a worker runs serially on that worker, so nesting never exceeds the
/// global budget. The exception from the lowest failing index is rethrown
/// after all workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace cpt
