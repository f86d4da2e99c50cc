#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>

#include "gradcheck.hpp"
#include "matteforge/engine/checkpoint.hpp"
#include "matteforge/engine/kernels.hpp"
#include "matteforge/engine/ops.hpp"
#include "matteforge/engine/optim.hpp"
#include "matteforge/engine/parallel.hpp"

using namespace mf;
using namespace mf::engine;
using mf::test::check_op;
using mf::test::random_tensor;
using mf::test::Tensor64;

namespace {

using Ins = std::vector<Tensor64>;
constexpr double kOpTolerance = 1e-4;

}  // namespace

TEST_CASE("tensor construction validates element counts") {
  CHECK_THROWS_AS(Tensor<float>({2, 3}, std::vector<float>(5)), DimensionError);
  auto t = Tensor<double>::full({2, 2}, 3.0);
  CHECK(t.numel() == 4);
  CHECK(t.data()[3] == 3.0);
}

TEST_CASE("backward rejects non-scalar and non-finite losses") {
  auto x = Tensor<double>::full({2}, 1.0, true);
  CHECK_THROWS_AS(backward(relu(x)), DimensionError);
  auto nan = Tensor<double>::full({1}, std::nan(""), true);
  CHECK_THROWS_AS(backward(sum(nan)), NumericalError);
}

TEST_CASE("gradient check: convolutions") {
  std::mt19937_64 rng(1);
  struct Case {
    std::size_t n, c, h, w, o, k, stride, pad;
    bool bias;
  };
  for (const Case& k : {Case{1, 2, 5, 6, 3, 3, 1, 1, true}, Case{2, 3, 6, 6, 2, 3, 2, 1, false},
                        Case{1, 2, 7, 5, 2, 1, 1, 0, true}, Case{2, 1, 8, 8, 2, 7, 2, 3, true},
                        Case{1, 3, 4, 4, 2, 2, 1, 0, false}}) {
    CAPTURE(k.k);
    CAPTURE(k.stride);
    Ins in{random_tensor({k.n, k.c, k.h, k.w}, rng), random_tensor({k.o, k.c, k.k, k.k}, rng)};
    if (k.bias) in.push_back(random_tensor({k.o}, rng));
    const bool bias = k.bias;
    const auto r = check_op(
        [&](const Ins& x) { return conv2d(x[0], x[1], bias ? x[2] : Tensor64(), k.stride, k.pad); }, in, rng);
    CHECK(r.max_rel_error < kOpTolerance);
  }
  Ins in{random_tensor({2, 2, 8, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)};
  CHECK(check_op([](const Ins& x) { return downsample_conv(x[0], x[1], x[2]); }, in, rng).max_rel_error <
        kOpTolerance);
}

TEST_CASE("gradient check: pooling, resizing and pointwise ops") {
  std::mt19937_64 rng(2);
  CHECK(check_op([](const Ins& x) { return max_pool2(x[0]); }, {random_tensor({2, 3, 6, 4}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return resize_nearest(x[0], 7, 9); }, {random_tensor({1, 2, 3, 4}, rng)},
                 rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return resize_nearest(x[0], 3, 2); }, {random_tensor({1, 2, 6, 5}, rng)},
                 rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return relu(x[0]); }, {random_tensor({2, 2, 3, 3}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return engine::tanh(x[0]); }, {random_tensor({3, 4}, rng, -3, 3)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return add(x[0], x[1]); },
                 {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return scale(x[0], x[1]); },
                 {random_tensor({2, 3, 2, 2}, rng), random_tensor({}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return scale(x[0], 0.37); }, {random_tensor({5}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return clamp(x[0], 0.0, 1.0); }, {random_tensor({4, 4}, rng, -0.9, 1.9)},
                 rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return sum(x[0]); }, {random_tensor({3, 3}, rng)}, rng).max_rel_error <
        kOpTolerance);
  CHECK(check_op([](const Ins& x) { return concat_channels<double>({x[0], x[1]}); },
                 {random_tensor({2, 1, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)}, rng)
            .max_rel_error < kOpTolerance);
  CHECK(check_op([](const Ins& x) { return crop(x[0], 3, 2); }, {random_tensor({2, 2, 5, 4}, rng)}, rng)
            .max_rel_error < kOpTolerance);
}

TEST_CASE("gradient check: batch normalization") {
  std::mt19937_64 rng(3);
  for (auto mode : {NormMode::kTrain, NormMode::kEval}) {
    auto stats = RunningStats<double>::make(3);
    stats.mean.data()[1] = 0.3;
    stats.var.data()[2] = 2.0;
    Ins in{random_tensor({2, 3, 3, 4}, rng), random_tensor({3}, rng, 0.5, 1.5), random_tensor({3}, rng)};
    const auto r = check_op(
        [&](const Ins& x) {
          auto s = stats;  // running stats must not drift between evaluations
          s.mean = stats.mean.clone();
          s.var = stats.var.clone();
          return batch_norm(x[0], x[1], x[2], s, mode);
        },
        in, rng);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("batch normalization statistics") {
  auto x = Tensor<double>({2, 1, 1, 2}, {1, 2, 3, 4});
  auto stats = RunningStats<double>::make(1);
  auto y = batch_norm(x, Tensor<double>::full({1}, 1.0), Tensor<double>::zeros({1}), stats, NormMode::kTrain);
  // mean 2.5, biased var 1.25
  CHECK(y.data()[0] == doctest::Approx(-1.5 / std::sqrt(1.25 + 1e-5)).epsilon(1e-12));
  CHECK(stats.mean.data()[0] == doctest::Approx(0.25));
  CHECK(stats.var.data()[0] == doctest::Approx(0.9 + 0.1 * 5.0 / 3.0));
  auto one = Tensor<double>({1, 1, 1, 1}, {1.0});
  CHECK_THROWS_AS(batch_norm(one, Tensor<double>::full({1}, 1.0), Tensor<double>::zeros({1}), stats,
                             NormMode::kTrain),
                  DimensionError);
}

TEST_CASE("shape errors") {
  auto a = Tensor<double>::zeros({1, 1, 4, 4});
  CHECK_THROWS_AS(add(a, Tensor<double>::zeros({1, 1, 4, 3})), DimensionError);
  CHECK_THROWS_AS(max_pool2(Tensor<double>::zeros({1, 1, 5, 4})), DimensionError);
  CHECK_THROWS_AS(conv2d(a, Tensor<double>::zeros({1, 2, 3, 3}), Tensor<double>(), 1, 1), DimensionError);
  CHECK_THROWS_AS(downsample_conv(Tensor<double>::zeros({1, 1, 5, 5}), Tensor<double>::zeros({1, 1, 3, 3}),
                                  Tensor<double>()),
                  DimensionError);
}

TEST_CASE("max_pool2 and resize_nearest examples") {
  auto x = Tensor<double>({1, 1, 2, 4}, {1, 5, 2, 2, 3, 0, 2, 1});
  auto y = max_pool2(x);
  CHECK(y.data()[0] == 5);
  CHECK(y.data()[1] == 2);
  // Ties route the gradient to the first maximum in row-major order.
  auto xt = Tensor<double>({1, 1, 2, 2}, {1, 1, 1, 1}, true);
  backward(sum(max_pool2(xt)));
  CHECK(xt.grad()[0] == 1);
  CHECK(xt.grad()[1] == 0);
  CHECK(xt.grad()[3] == 0);

  auto small = Tensor<double>({1, 1, 2, 2}, {1, 2, 3, 4});
  auto up = resize_nearest(small, 4, 4);
  const std::vector<double> expect{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(up.data()[i] == expect[i]);
}

TEST_CASE("backward is deterministic") {
  std::mt19937_64 rng(4);
  auto x = random_tensor({2, 3, 8, 8}, rng);
  auto w = random_tensor({4, 3, 3, 3}, rng);
  std::vector<double> first;
  for (int run = 0; run < 2; ++run) {
    x.zero_grad();
    w.zero_grad();
    backward(sum(engine::tanh(max_pool2(relu(conv2d(x, w, Tensor64(), 1, 1))))));
    std::vector<double> g(w.grad().begin(), w.grad().end());
    g.insert(g.end(), x.grad().begin(), x.grad().end());
    if (run == 0) first = g;
    else CHECK(g == first);
  }
}

TEST_CASE("ops stay finite on inputs in [-10, 10]") {
  std::mt19937_64 rng(5);
  auto x = random_tensor({2, 2, 4, 4}, rng, -10, 10);
  auto w = random_tensor({2, 2, 3, 3}, rng, -10, 10);
  auto stats = RunningStats<double>::make(2);
  std::vector<Tensor64> outs{conv2d(x, w, Tensor64(), 1, 1),
                             max_pool2(x),
                             resize_nearest(x, 7, 3),
                             relu(x),
                             engine::tanh(x),
                             clamp(x, 0.0, 1.0),
                             batch_norm(x, Tensor64::full({2}, 1.0), Tensor64::zeros({2}), stats, NormMode::kTrain),
                             scale(x, 10.0)};
  for (const auto& o : outs) CHECK(all_finite<double>(o.data()));
}

TEST_CASE("parallel kernels agree with the reference loops") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> d(-1, 1);
  auto buf = [&](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
  };
  kernels::ConvGeometry g;
  g.batch = 2;
  g.in_channels = 3;
  g.in_h = 9;
  g.in_w = 7;
  g.out_channels = 4;
  g.kernel_h = g.kernel_w = 3;
  g.stride = 2;
  g.padding = 1;
  const auto x = buf(g.batch * g.in_channels * g.in_h * g.in_w);
  const auto w = buf(g.out_channels * g.patch_size());
  const auto bias = buf(g.out_channels);
  const std::size_t out_n = g.batch * g.out_channels * g.out_h() * g.out_w();
  std::vector<double> y(out_n), y_ref(out_n);
  kernels::conv2d_forward(g, x.data(), w.data(), bias.data(), y.data());
  kernels::reference::conv2d_forward(g, x.data(), w.data(), bias.data(), y_ref.data());
  for (std::size_t i = 0; i < out_n; ++i) CHECK(y[i] == doctest::Approx(y_ref[i]).epsilon(1e-12));

  const auto dout = buf(out_n);
  std::vector<double> dx(x.size()), dw(w.size()), db(g.out_channels);
  std::vector<double> dx_r(x.size()), dw_r(w.size()), db_r(g.out_channels);
  kernels::conv2d_backward(g, x.data(), w.data(), dout.data(), dx.data(), dw.data(), db.data());
  kernels::reference::conv2d_backward(g, x.data(), w.data(), dout.data(), dx_r.data(), dw_r.data(), db_r.data());
  for (std::size_t i = 0; i < dx.size(); ++i) CHECK(dx[i] == doctest::Approx(dx_r[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < dw.size(); ++i) CHECK(dw[i] == doctest::Approx(dw_r[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < db.size(); ++i) CHECK(db[i] == doctest::Approx(db_r[i]).epsilon(1e-12));

  const std::size_t m = 37, n = 300, k = 19;
  const auto a = buf(m * k), b = buf(k * n);
  std::vector<double> c(m * n), c_ref(m * n);
  kernels::gemm(m, n, k, a.data(), b.data(), c.data(), false);
  kernels::reference::gemm(m, n, k, a.data(), b.data(), c_ref.data(), false);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(c_ref[i]).epsilon(1e-12));

  const auto p = buf(3 * 6 * 8);
  std::vector<double> pool(3 * 3 * 4), pool_r(pool.size());
  std::vector<std::size_t> arg(pool.size()), arg_r(pool.size());
  kernels::max_pool2_forward(3, 6, 8, p.data(), pool.data(), arg.data());
  kernels::reference::max_pool2_forward(3, 6, 8, p.data(), pool_r.data(), arg_r.data());
  CHECK(pool == pool_r);
  CHECK(arg == arg_r);

  std::vector<double> rs(2 * 5 * 11), rs_r(rs.size());
  kernels::resize_nearest_forward(2, 6, 8, 5, 11, p.data(), rs.data());
  kernels::reference::resize_nearest_forward(2, 6, 8, 5, 11, p.data(), rs_r.data());
  CHECK(rs == rs_r);
  std::vector<double> back(2 * 6 * 8), back_r(back.size());
  kernels::resize_nearest_backward(2, 6, 8, 5, 11, rs.data(), back.data());
  kernels::reference::resize_nearest_backward(2, 6, 8, 5, 11, rs.data(), back_r.data());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == doctest::Approx(back_r[i]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bit-identical across thread counts") {
  std::mt19937_64 rng(7);
  auto x = random_tensor({2, 4, 16, 16}, rng);
  auto w = random_tensor({8, 4, 3, 3}, rng);
  const int saved = parallel::max_threads();
  std::vector<std::vector<double>> results;
  for (int threads : {1, 3, 4}) {
    parallel::set_max_threads(threads);
    x.zero_grad();
    w.zero_grad();
    auto y = conv2d(x, w, Tensor64(), 1, 1);
    backward(sum(engine::tanh(y)));
    std::vector<double> all(y.data().begin(), y.data().end());
    all.insert(all.end(), w.grad().begin(), w.grad().end());
    all.insert(all.end(), x.grad().begin(), x.grad().end());
    results.push_back(all);
  }
  parallel::set_max_threads(saved);
  CHECK(results[0] == results[1]);
  CHECK(results[0] == results[2]);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = Tensor<double>::full({3}, 0.7, true);
  p.node()->ensure_grad();
  AdamState<double> st;
  std::vector<Tensor<double>> ps{p};
  adam_step(std::span<Tensor<double>>(ps), st, 0.1);
  for (double v : p.data()) CHECK(v == 0.7);
}

TEST_CASE("adam: first step moves by about lr") {
  auto p = Tensor<double>::scalar(1.0, true);
  p.node()->ensure_grad()[0] = 1.0;
  AdamState<double> st;
  std::vector<Tensor<double>> ps{p};
  adam_step(std::span<Tensor<double>>(ps), st, 0.1);
  CHECK(p.item() == doctest::Approx(0.9).epsilon(1e-7));
  CHECK_THROWS_AS(adam_step(std::span<Tensor<double>>(ps), st, -1.0), std::invalid_argument);
}

TEST_CASE("adam: ten steps on a quadratic match a hand-computed trace") {
  // f(p) = (p - 3)^2 from p = 0, lr 0.1, beta1 0.5, beta2 0.999, eps 1e-8.
  const double expect[10] = {0.09999999983333335, 0.19942159119196146, 0.2979120641761561,
                             0.39517420245325896, 0.49097388543228304, 0.5851358501655826,
                             0.677533113133896,   0.7680749152638771,  0.8566960718705048,
                             0.9433488003882256};
  auto p = Tensor<double>::scalar(0.0, true);
  AdamState<double> st;
  std::vector<Tensor<double>> ps{p};
  for (int t = 0; t < 10; ++t) {
    p.zero_grad();
    p.node()->ensure_grad()[0] = 2.0 * (p.item() - 3.0);
    adam_step(std::span<Tensor<double>>(ps), st, 0.1);
    CHECK(p.item() == doctest::Approx(expect[t]).epsilon(1e-12));
  }
}

TEST_CASE("lr schedule: warmup and cosine") {
  const LrSchedule s{4e-4, 50, 2050, 0.0};
  CHECK(lr_at(s, 0) == 0.0);
  CHECK(lr_at(s, 25) == doctest::Approx(2e-4));
  CHECK(lr_at(s, 50) == doctest::Approx(4e-4).epsilon(1e-12));
  CHECK(lr_at(s, 50 + 1000) == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(lr_at(s, 50 + 500) == doctest::Approx(0.0003414213562373095).epsilon(1e-9));
  CHECK(std::abs(lr_at(s, 2050)) < 1e-18);
  CHECK_THROWS_AS(lr_at(s, -1), std::out_of_range);
  CHECK_THROWS_AS(lr_at(s, 2051), std::out_of_range);
  CHECK(std::abs(lr_at(s, 49) - lr_at(s, 50)) < 1e-5);  // continuous at the boundary
  for (std::int64_t t = 50; t < 2000; ++t) CHECK(lr_at(s, t + 1) <= lr_at(s, t));
  CHECK_THROWS_AS(lr_at(LrSchedule{4e-4, 10, 10, 0.0}, 0), std::invalid_argument);
}

TEST_CASE("checkpoint archive round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "mf_test_ckpt";
  std::filesystem::create_directories(dir);
  const std::vector<NamedArray> entries{{"a/w", {2, 3}, {1, 2, 3, 4, 5, 6}},
                                        {"opt/step", {1}, {7}},
                                        {"scalar", {}, {0.5f}}};
  write_archive(dir / "x.mfck", entries);
  const auto back = read_archive(dir / "x.mfck");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == entries[i].name);
    CHECK(back[i].shape == entries[i].shape);
    CHECK(back[i].data == entries[i].data);
  }
  CHECK(find_entry(back, "opt/step")->data[0] == 7.0f);
  CHECK(find_entry(back, "missing") == nullptr);

  std::ifstream is(dir / "x.mfck", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), {});
  CHECK(bytes.substr(0, 4) == "MFCK");
  {
    std::ofstream os(dir / "bad.mfck", std::ios::binary);
    os << "XXXX" << bytes.substr(4);
  }
  CHECK_THROWS_AS(read_archive(dir / "bad.mfck"), DataError);
  {
    std::ofstream os(dir / "short.mfck", std::ios::binary);
    os << bytes.substr(0, bytes.size() - 3);
  }
  CHECK_THROWS_AS(read_archive(dir / "short.mfck"), DataError);
  {
    std::string v2 = bytes;
    v2[4] = 9;
    std::ofstream os(dir / "version.mfck", std::ios::binary);
    os << v2;
  }
  CHECK_THROWS_AS(read_archive(dir / "version.mfck"), DataError);
  CHECK_THROWS_AS(read_archive(dir / "nonexistent.mfck"), DataError);
  std::filesystem::remove_all(dir);
}
