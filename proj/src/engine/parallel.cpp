#include "matteforge/engine/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

namespace mf::parallel {
namespace {

int initial_threads() {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MATTEFORGE_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1) hw = std::min(hw, cap);
    } catch (const std::exception&) {
    }
  }
  omp_set_num_threads(hw);
  return hw;
}

int& current() {
  static int threads = initial_threads();
  return threads;
}

}  // namespace

int max_threads() { return current(); }

void set_max_threads(int threads) {
  current() = std::max(1, threads);
  omp_set_num_threads(current());
}

}  // namespace mf::parallel
