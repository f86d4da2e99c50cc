#pragma once

namespace mf::parallel {

/// Thread cap for OpenMP kernels and batch workers. Reads MATTEFORGE_THREADS
/// on first use; defaults to the hardware concurrency.
int max_threads();
void set_max_threads(int threads);

}  // namespace mf::parallel
