// Parallel kernels against the serial reference loops they replace.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "matteforge/engine/kernels.hpp"
#include "matteforge/engine/parallel.hpp"

namespace {

using mf::kernels::ConvGeometry;

std::vector<float> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

ConvGeometry geometry(const benchmark::State& state) {
  ConvGeometry g;
  g.batch = 4;
  g.in_channels = static_cast<std::size_t>(state.range(0));
  g.out_channels = static_cast<std::size_t>(state.range(0));
  g.in_h = g.in_w = static_cast<std::size_t>(state.range(1));
  g.kernel_h = g.kernel_w = 3;
  g.padding = 1;
  return g;
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  mf::parallel::max_threads();
  const auto g = geometry(state);
  const auto x = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
  const auto w = random_buffer(g.out_channels * g.patch_size(), 2);
  std::vector<float> out(g.batch * g.out_channels * g.out_h() * g.out_w());
  for (auto _ : state) {
    if constexpr (Parallel) {
      mf::kernels::conv2d_forward(g, x.data(), w.data(), static_cast<const float*>(nullptr), out.data());
    } else {
      mf::kernels::reference::conv2d_forward(g, x.data(), w.data(), static_cast<const float*>(nullptr),
                                             out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(out.size() * g.patch_size()));
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  mf::parallel::max_threads();
  const auto g = geometry(state);
  const auto x = random_buffer(g.batch * g.in_channels * g.in_h * g.in_w, 1);
  const auto w = random_buffer(g.out_channels * g.patch_size(), 2);
  const auto dout = random_buffer(g.batch * g.out_channels * g.out_h() * g.out_w(), 3);
  std::vector<float> dx(x.size()), dw(w.size()), db(g.out_channels);
  for (auto _ : state) {
    if constexpr (Parallel) {
      mf::kernels::conv2d_backward(g, x.data(), w.data(), dout.data(), dx.data(), dw.data(), db.data());
    } else {
      mf::kernels::reference::conv2d_backward(g, x.data(), w.data(), dout.data(), dx.data(), dw.data(),
                                              db.data());
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  mf::parallel::max_threads();
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_buffer(n * n, 1), b = random_buffer(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      mf::kernels::gemm(n, n, n, a.data(), b.data(), c.data(), false);
    } else {
      mf::kernels::reference::gemm(n, n, n, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_MaxPool(benchmark::State& state) {
  mf::parallel::max_threads();
  const std::size_t planes = 64, side = static_cast<std::size_t>(state.range(0));
  const auto x = random_buffer(planes * side * side, 1);
  std::vector<float> out(planes * side * side / 4);
  std::vector<std::size_t> arg(out.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      mf::kernels::max_pool2_forward(planes, side, side, x.data(), out.data(), arg.data());
    } else {
      mf::kernels::reference::max_pool2_forward(planes, side, side, x.data(), out.data(), arg.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->Args({16, 64})->Args({32, 128});
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->Args({16, 64})->Args({32, 128});
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->Args({16, 64});
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->Args({16, 64});
BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Arg(128)->Arg(256);
BENCHMARK(BM_MaxPool<true>)->Name("max_pool2/parallel")->Arg(128);
BENCHMARK(BM_MaxPool<false>)->Name("max_pool2/reference")->Arg(128);

BENCHMARK_MAIN();
