#include <cmath>
#include <random>

#include <doctest.h>
#include <json.hpp>

#include "matteforge/error.hpp"
#include "matteforge/metrics/metrics.hpp"
#include "oracles.hpp"

using namespace mf;
using namespace mf::metrics;
using trimap::Label;

namespace {

AlphaMatte random_matte(std::size_t h, std::size_t w, std::mt19937_64& rng, bool quantize = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AlphaMatte a(h, w);
  for (auto& v : a.values) {
    const double r = u(rng);
    v = r < 0.2 ? 0.0 : r < 0.4 ? 1.0 : u(rng);
    if (quantize) v = std::round(v * 20) / 20;
  }
  return a;
}

Trimap random_trimap(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  Trimap t(h, w, Label::kUnknown);
  for (auto& l : t.labels) l = rng() % 4 == 0 ? Label::kForeground : Label::kUnknown;
  return t;
}

}  // namespace

TEST_CASE("sad and mse examples") {
  AlphaMatte gt(1, 4), pred(1, 4);
  gt.values = {0.0, 0.5, 1.0, 1.0};
  pred.values = {0.25, 0.5, 0.0, 1.0};
  Trimap t(1, 4, Label::kUnknown);
  CHECK(sad(gt, pred, t) == doctest::Approx(1.25 / 1000).epsilon(1e-15));
  CHECK(*mse(gt, pred, t) == doctest::Approx((0.0625 + 1.0) / 4).epsilon(1e-15));
  t.at(0, 2) = Label::kForeground;
  CHECK(sad(gt, pred, t) == doctest::Approx(0.25 / 1000).epsilon(1e-15));
  CHECK(!mse(gt, pred, Trimap(1, 4, Label::kBackground)).has_value());
  CHECK_THROWS_AS(sad(gt, AlphaMatte(2, 2), t), DimensionError);
}

TEST_CASE("derivative filter") {
  const auto f = make_derivative_filter(1.4);
  CHECK(f.radius == 5);
  REQUIRE(f.smooth.size() == 11);
  double s = 0, d = 0;
  for (int i = 0; i < 11; ++i) {
    s += f.smooth[i];
    d += std::abs(f.derivative[i]);
    CHECK(f.smooth[i] == doctest::Approx(f.smooth[10 - i]).epsilon(1e-15));
    CHECK(f.derivative[i] == doctest::Approx(-f.derivative[10 - i]).epsilon(1e-15));
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d == doctest::Approx(1.0).epsilon(1e-14));
  // A constant matte has zero gradient everywhere, borders included.
  for (double g : gradient_magnitude(AlphaMatte(9, 7, 0.4))) CHECK(std::abs(g) < 1e-14);
}

TEST_CASE("metrics match brute-force oracles") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 8, w = 8;
    const auto gt = random_matte(h, w, rng, trial % 2);
    const auto pred = random_matte(h, w, rng, trial % 2);
    const auto t = random_trimap(h, w, rng);
    CHECK(sad(gt, pred, t) == oracle::sad(gt, pred, t));
    CHECK(*mse(gt, pred, t) == oracle::mse(gt, pred, t));
    CHECK(std::abs(gradient_error(gt, pred, t) - oracle::gradient_error(gt, pred, t, kGradientSigma)) < 1e-6);
    CHECK(connectivity_error(gt, pred, t) == oracle::connectivity_error(gt, pred, t, kConnStep, kConnTolerance));
  }
  // Non-square, larger than the filter support.
  const auto gt = random_matte(13, 21, rng), pred = random_matte(13, 21, rng);
  const auto t = random_trimap(13, 21, rng);
  CHECK(std::abs(gradient_error(gt, pred, t) - oracle::gradient_error(gt, pred, t, kGradientSigma)) < 1e-6);
  CHECK(connectivity_error(gt, pred, t) == oracle::connectivity_error(gt, pred, t, kConnStep, kConnTolerance));
}

TEST_CASE("identical inputs score zero") {
  std::mt19937_64 rng(22);
  const auto a = random_matte(10, 12, rng);
  const Trimap t(10, 12, Label::kUnknown);
  const auto m = evaluate_sample({"x", a, a, t});
  CHECK(m.sad == 0.0);
  CHECK(*m.mse == 0.0);
  CHECK(m.grad == 0.0);
  CHECK(m.conn == 0.0);
}

TEST_CASE("connectivity levels") {
  // Two separate blobs: only the larger one is connected at every level.
  AlphaMatte a(1, 7, 0.0);
  a.values = {1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.55};
  const auto lv = connectivity_levels(a, a, 0.1);
  CHECK(lv[0] == doctest::Approx(0.9));
  CHECK(lv[3] == 0.0);
  CHECK(lv[4] == 0.0);
  // Equal-sized blobs: the first in scan order wins.
  AlphaMatte b(1, 5, 1.0);
  b.values[2] = 0.0;
  const auto lb = connectivity_levels(b, b, 0.1);
  CHECK(lb[0] == doctest::Approx(0.9));
  CHECK(lb[3] == 0.0);
}

TEST_CASE("evaluate aggregates and reports") {
  std::mt19937_64 rng(23);
  std::vector<EvalSample> samples;
  for (const char* id : {"b", "a", "c"}) {
    samples.push_back({id, random_matte(8, 8, rng), random_matte(8, 8, rng), random_trimap(8, 8, rng)});
  }
  samples.push_back({"d", random_matte(8, 8, rng), random_matte(8, 8, rng), Trimap(8, 8, Label::kForeground)});
  const auto r = evaluate(samples);
  REQUIRE(r.samples.size() == 4);
  CHECK(r.samples[0].id == "a");
  CHECK(r.samples[3].id == "d");
  CHECK(r.undefined_mse == 1);
  double sad_sum = 0, mse_sum = 0;
  for (const auto& s : samples) {
    sad_sum += oracle::sad(s.gt, s.pred, s.trimap);
    if (s.id != std::string("d")) mse_sum += oracle::mse(s.gt, s.pred, s.trimap);
  }
  CHECK(r.mean_sad == doctest::Approx(sad_sum / 4).epsilon(1e-14));
  CHECK(r.mean_mse == doctest::Approx(mse_sum / 3).epsilon(1e-14));
  CHECK(r.samples[3].sad == 0.0);

  const auto j = nlohmann::json::parse(report_to_json(r));
  CHECK(j.contains("convention"));
  CHECK(j.at("samples").size() == 4);
  CHECK(j.at("mean").at("sad").get<double>() == doctest::Approx(r.mean_sad));
  CHECK(report_to_table(r).find("mean") != std::string::npos);
  CHECK_THROWS_AS(evaluate({}), std::invalid_argument);
}
