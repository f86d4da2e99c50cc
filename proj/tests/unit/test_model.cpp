#include <random>

#include <doctest.h>

#include "gradcheck.hpp"
#include "matteforge/error.hpp"
#include "matteforge/model/model.hpp"

using namespace mf;
using namespace mf::model;
using trimap::Label;

namespace {

ModelConfig small_config(std::size_t width = 4, bool tcp = true) {
  ModelConfig cfg;
  cfg.base_width = width;
  cfg.tcp_width = width;
  cfg.tcp_enabled = tcp;
  return cfg;
}

template <typename T>
Tensor<T> random_input(std::size_t n, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<T> x = Tensor<T>::zeros({n, kInputChannels, h, w});
  auto d = x.data();
  const std::size_t plane = h * w;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t c = 0; c < 3; ++c) d[(b * kInputChannels + c) * plane + p] = static_cast<T>(u(rng));
      d[(b * kInputChannels + 3 + rng() % 3) * plane + p] = T(1);
    }
  return x;
}

imaging::Image random_image(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  imaging::Image img(h, w);
  for (auto& v : img.values) v = u(rng);
  return img;
}

trimap::Trimap random_trimap(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  trimap::Trimap t(h, w);
  for (auto& l : t.labels) l = static_cast<Label>(rng() % 3);
  return t;
}

template <typename T>
void set_all(Tensor<T> t, T v) {
  for (auto& x : t.data()) x = v;
}

}  // namespace

TEST_CASE("forward shapes and input checks") {
  std::mt19937_64 rng(31);
  MattingModel<double> m(small_config(), 1);
  const auto x = random_input<double>(2, 64, 96, rng);
  const auto tr = m.forward(x, x, NormMode::kTrain);
  CHECK(tr.alpha_pred.shape() == engine::Shape{2, 1, 64, 96});
  CHECK(tr.sp_logits.shape() == engine::Shape{2, 1, 64, 96});
  CHECK(tr.tcp_logits.shape() == engine::Shape{2, 1, 64, 96});
  CHECK(tr.shallow.shape() == engine::Shape{2, 4, 32, 48});
  for (double a : tr.alpha_pred.data()) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  CHECK_THROWS_AS(m.forward(random_input<double>(1, 48, 64, rng), random_input<double>(1, 48, 64, rng),
                            NormMode::kTrain),
                  DimensionError);
  CHECK_THROWS_AS(m.forward(x, random_input<double>(2, 64, 64, rng), NormMode::kTrain), DimensionError);
  CHECK_THROWS_AS(m.sp_forward(Tensor<double>::zeros({1, 5, 64, 64}), NormMode::kTrain), DimensionError);
  CHECK_THROWS_AS(MattingModel<double>(small_config(0), 1), std::invalid_argument);

  ModelConfig stage1 = small_config();
  stage1.ffu_source = FfuSource::kStage1;
  MattingModel<double> m1(stage1, 1);
  CHECK(m1.forward(x, x, NormMode::kTrain).shallow.shape() == engine::Shape{2, 4, 16, 24});
}

TEST_CASE("texture path keeps input resolution") {
  std::mt19937_64 rng(32);
  MattingModel<float> m(small_config(), 2);
  for (std::size_t s = 33; s <= 97; s += 8) {
    for (std::size_t w : {s, s + 3}) {
      const auto x = random_input<float>(1, s, w, rng);
      const auto shallow = Tensor<float>::zeros({1, 4, (s + 1) / 2, (w + 1) / 2});
      std::vector<engine::Shape> acts;
      const auto out = m.tcp_forward(x, shallow, NormMode::kEval, &acts);
      CHECK(out.shape() == engine::Shape{1, 1, s, w});
      REQUIRE(!acts.empty());
      for (const auto& a : acts) {
        CHECK(a[2] == s);
        CHECK(a[3] == w);
      }
    }
  }
}

TEST_CASE("w_c = 0 makes the texture path ignore shallow features") {
  std::mt19937_64 rng(33);
  MattingModel<double> m(small_config(), 3);
  REQUIRE(m.w_c().item() == 0.0);
  const auto x = random_input<double>(1, 40, 40, rng);
  const auto s1 = test::random_tensor({1, 4, 20, 20}, rng, -1, 1, false);
  const auto s2 = test::random_tensor({1, 4, 20, 20}, rng, -1, 1, false);
  const auto a = m.tcp_forward(x, s1, NormMode::kEval);
  const auto b = m.tcp_forward(x, s2, NormMode::kEval);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  m.w_c().data()[0] = 0.5;
  const auto c = m.tcp_forward(x, s1, NormMode::kEval);
  const auto d = m.tcp_forward(x, s2, NormMode::kEval);
  CHECK(!std::equal(c.data().begin(), c.data().end(), d.data().begin()));
}

TEST_CASE("baseline equals a model whose texture output is zero") {
  std::mt19937_64 rng(34);
  MattingModel<double> base(small_config(4, false), 7);
  MattingModel<double> full(small_config(4, true), 7);
  CHECK(!base.params().contains("ffu/w_c"));
  set_all(full.params().find("tcp/out/w"), 0.0);
  set_all(full.params().find("tcp/out/b"), 0.0);
  const auto x = random_input<double>(2, 32, 64, rng);
  for (auto mode : {NormMode::kTrain, NormMode::kEval}) {
    const auto a = base.forward(x, x, mode).alpha_pred;
    const auto b = full.forward(x, x, mode).alpha_pred;
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  }
}

TEST_CASE("zero-initialized outputs predict zero") {
  std::mt19937_64 rng(35);
  ModelConfig cfg = small_config();
  cfg.zero_init_output = true;
  MattingModel<float> m(cfg, 1);
  const auto x = random_input<float>(2, 32, 32, rng);
  const auto alpha = m.forward(x, x, NormMode::kTrain).alpha_pred;
  for (float a : alpha.data()) CHECK(a == 0.0f);
}

TEST_CASE("padding to stride and cropping back") {
  std::mt19937_64 rng(36);
  const auto x = random_input<double>(1, 33, 50, rng);
  const auto p = pad_to_stride(x);
  CHECK(p.tensor.shape() == engine::Shape{1, 6, 64, 64});
  CHECK(p.height == 33);
  CHECK(p.width == 50);
  // Interior is untouched; row 33 mirrors row 31.
  CHECK(p.tensor.data()[5 * 64 + 7] == x.data()[5 * 50 + 7]);
  CHECK(p.tensor.data()[33 * 64 + 7] == x.data()[31 * 50 + 7]);
  CHECK(pad_to_stride(random_input<double>(1, 32, 64, rng)).tensor.shape() == engine::Shape{1, 6, 32, 64});

  MattingModel<float> m(small_config(), 4);
  for (std::size_t h = 1; h <= 97; h += 16) {
    for (std::size_t w : {std::size_t{17}, std::size_t{64}, std::size_t{65}}) {
      const auto img = random_image(h, w, rng);
      const auto t = random_trimap(h, w, rng);
      const auto tr = model_forward(m, img, {t, t}, NormMode::kEval);
      CHECK(tr.alpha_pred.shape() == engine::Shape{1, 1, h, w});
      CHECK(tr.tcp_logits.shape() == engine::Shape{1, 1, h, w});
      const auto matte = predict_matte(tr.alpha_pred, t);
      REQUIRE(matte.same_size(h, w));
      for (std::size_t i = 0; i < t.labels.size(); ++i) {
        if (t.labels[i] == Label::kForeground) CHECK(matte.values[i] == 1.0);
        if (t.labels[i] == Label::kBackground) CHECK(matte.values[i] == 0.0);
        if (t.labels[i] == Label::kUnknown) CHECK(matte.values[i] == static_cast<double>(tr.alpha_pred.data()[i]));
      }
    }
  }
  CHECK_THROWS_AS(predict_matte(Tensor<float>::zeros({1, 1, 4, 4}), trimap::Trimap(4, 5)), DimensionError);
}

TEST_CASE("make_input layout") {
  imaging::Image img(1, 2);
  img.values = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  trimap::Trimap t(1, 2);
  t.labels = {Label::kForeground, Label::kBackground};
  const auto x = make_input<double>(img, t);
  CHECK(x.shape() == engine::Shape{1, 6, 1, 2});
  const std::vector<double> want{0.1, 0.4, 0.2, 0.5, 0.3, 0.6, 0, 1, 0, 0, 1, 0};
  CHECK(std::equal(want.begin(), want.end(), x.data().begin()));
  CHECK_THROWS_AS(make_input<double>(img, trimap::Trimap(2, 1)), DimensionError);
  CHECK(stack_batch<double>({x, x}).shape() == engine::Shape{2, 6, 1, 2});
}

TEST_CASE("state export and import") {
  std::mt19937_64 rng(37);
  ModelConfig cfg = small_config();
  cfg.ffu_source = FfuSource::kStage1;
  cfg.encoder_blocks = {1, 2, 1, 1};
  MattingModel<float> a(cfg, 5);
  a.w_c().data()[0] = 0.25f;
  const auto x = random_input<float>(2, 32, 32, rng);
  a.forward(x, x, NormMode::kTrain);  // moves the running statistics
  const auto state = export_state(a);
  const auto cfg2 = config_from_state(state);
  CHECK(cfg2.base_width == 4);
  CHECK(cfg2.encoder_blocks == cfg.encoder_blocks);
  CHECK(cfg2.ffu_source == FfuSource::kStage1);
  MattingModel<float> b(cfg2, 99);
  import_state(b, state);
  const auto pa = a.forward(x, x, NormMode::kEval).alpha_pred;
  const auto pb = b.forward(x, x, NormMode::kEval).alpha_pred;
  CHECK(std::equal(pa.data().begin(), pa.data().end(), pb.data().begin()));

  MattingModel<float> wrong(small_config(8), 1);
  CHECK_THROWS_AS(import_state(wrong, state), DataError);
  MattingModel<float> base(small_config(4, false), 1);
  CHECK_THROWS_AS(import_state(b, export_state(base)), DataError);
}

TEST_CASE("w_c and output-layer gradients") {
  std::mt19937_64 rng(38);
  MattingModel<double> m(small_config(), 8);
  m.w_c().data()[0] = 0.3;
  const auto x = random_input<double>(2, 32, 32, rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> r(2 * 32 * 32);
  for (auto& v : r) v = u(rng);
  auto loss_fn = [&](const std::vector<Tensor<double>>&) {
    // Logits, not the clamped prediction, keep the objective smooth.
    const auto tr = m.forward(x, x, NormMode::kTrain);
    return test::project(engine::add(tr.sp_logits, tr.tcp_logits), r);
  };
  const auto res = test::check_gradients(
      loss_fn, {m.w_c(), m.params().find("tcp/out/w"), m.params().find("ffu/proj/w")}, 1e-6, rng, 8);
  CHECK(res.checked == 17);
  CHECK(res.max_rel_error < 1e-4);
}
