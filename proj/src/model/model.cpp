#include "matteforge/model/model.hpp"

#include <algorithm>

#include "layers.hpp"

namespace mf::model {

using detail::BasicBlock;
using detail::Conv;
using detail::ConvNormRelu;
using detail::Init;
using detail::TextureBlock;

template <typename T>
struct MattingModel<T>::Layers {
  // Semantic path
  ConvNormRelu<T> stem;
  std::array<std::vector<BasicBlock<T>>, 4> stages;
  std::array<std::array<ConvNormRelu<T>, 2>, 4> skips;  // per decoder level
  std::array<ConvNormRelu<T>, 4> up;
  std::array<ConvNormRelu<T>, 4> fuse;
  ConvNormRelu<T> head;
  Conv<T> sp_out;
  // Textural compensate path
  Conv<T> tcp_conv0;
  detail::Norm<T> tcp_bn0;
  std::array<TextureBlock<T>, 2> tcp_blocks;
  Conv<T> ffu_proj;
  Tensor<T> w_c;
  Conv<T> refine_conv;
  detail::Norm<T> refine_bn;
  Conv<T> tcp_out;
};

template <typename T>
MattingModel<T>::MattingModel(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), layers_(std::make_unique<Layers>()) {
  if (cfg.base_width < 1 || cfg.tcp_width < 1) throw std::invalid_argument("model widths must be >= 1");
  for (auto b : cfg.encoder_blocks) {
    if (b < 1) throw std::invalid_argument("every encoder stage needs at least one block");
  }
  Rng rng(seed);
  auto& L = *layers_;
  auto& P = params_;
  const std::size_t w = cfg.base_width;
  const std::array<std::size_t, 4> widths{w, 2 * w, 4 * w, 8 * w};
  const Init out_init = cfg.zero_init_output ? Init::kZero : Init::kKaiming;

  L.stem = ConvNormRelu<T>::make(P, "sp/stem", kInputChannels, w, 7, 2, rng);
  std::size_t in = w;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < cfg.encoder_blocks[s]; ++b) {
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      L.stages[s].push_back(BasicBlock<T>::make(
          P, "sp/stage" + std::to_string(s + 1) + "/block" + std::to_string(b), in, widths[s], stride, rng));
      in = widths[s];
    }
  }
  // Decoder level l consumes skip feature l: 0 = stem (w), 1..3 = stages 1..3.
  const std::array<std::size_t, 4> skip_ch{w, widths[0], widths[1], widths[2]};
  std::size_t dec_in = widths[3];
  for (int l = 3; l >= 0; --l) {
    const std::string lv = std::to_string(l);
    const std::size_t c = skip_ch[static_cast<std::size_t>(l)];
    L.up[l] = ConvNormRelu<T>::make(P, "sp/dec" + lv + "/up", dec_in, c, 3, 1, rng);
    L.skips[l][0] = ConvNormRelu<T>::make(P, "sp/skip" + lv + "/conv0", c, c, 3, 1, rng);
    L.skips[l][1] = ConvNormRelu<T>::make(P, "sp/skip" + lv + "/conv1", c, c, 3, 1, rng);
    L.fuse[l] = ConvNormRelu<T>::make(P, "sp/dec" + lv + "/fuse", 2 * c, c, 3, 1, rng);
    dec_in = c;
  }
  L.head = ConvNormRelu<T>::make(P, "sp/head", dec_in, w, 3, 1, rng);
  L.sp_out = Conv<T>::make(P, "sp/out", w, 1, 3, 1, true, rng, out_init);

  if (cfg.tcp_enabled) {
    const std::size_t tw = cfg.tcp_width;
    L.tcp_conv0 = Conv<T>::make(P, "tcp/extract/conv0", kInputChannels, tw, 3, 1, false, rng);
    L.tcp_bn0 = detail::Norm<T>::make(P, "tcp/extract/bn0", tw);
    L.tcp_blocks[0] = TextureBlock<T>::make(P, "tcp/extract/block0", tw, rng);
    L.tcp_blocks[1] = TextureBlock<T>::make(P, "tcp/extract/block1", tw, rng);
    const std::size_t shallow_ch = cfg.ffu_source == FfuSource::kStem ? w : widths[0];
    L.ffu_proj = Conv<T>::make(P, "ffu/proj", shallow_ch, tw, 1, 1, true, rng);
    L.w_c = P.add("ffu/w_c", Tensor<T>::scalar(T(0)));
    L.refine_conv = Conv<T>::make(P, "tcp/refine/conv0", tw, tw, 3, 1, false, rng);
    L.refine_bn = detail::Norm<T>::make(P, "tcp/refine/bn0", tw);
    L.tcp_out = Conv<T>::make(P, "tcp/out", tw, 1, 3, 1, true, rng, out_init);
  }
}

template <typename T>
MattingModel<T>::~MattingModel() = default;
template <typename T>
MattingModel<T>::MattingModel(MattingModel&&) noexcept = default;
template <typename T>
MattingModel<T>& MattingModel<T>::operator=(MattingModel&&) noexcept = default;

template <typename T>
Tensor<T> MattingModel<T>::w_c() const {
  return layers_->w_c;
}

template <typename T>
typename MattingModel<T>::SpOutput MattingModel<T>::sp_forward(const Tensor<T>& x, NormMode mode) {
  if (x.rank() != 4 || x.dim(1) != kInputChannels) {
    throw DimensionError("sp_forward expects N x 6 x H x W, got " + engine::shape_str(x.shape()));
  }
  if (x.dim(2) % kTotalStride != 0 || x.dim(3) % kTotalStride != 0) {
    throw DimensionError("sp_forward needs H and W divisible by 32, got " + engine::shape_str(x.shape()));
  }
  auto& L = *layers_;
  std::array<Tensor<T>, 4> skip_src;
  Tensor<T> stem = L.stem(x, mode);  // stride 2
  skip_src[0] = stem;
  Tensor<T> h = engine::max_pool2(stem);  // stride 4
  Tensor<T> stage1;
  for (std::size_t s = 0; s < 4; ++s) {
    for (const auto& block : L.stages[s]) h = block(h, mode);
    if (s == 0) stage1 = h;
    if (s < 3) skip_src[s + 1] = h;
  }
  Tensor<T> deepest = h;
  for (int l = 3; l >= 0; --l) {
    const auto& skip = skip_src[static_cast<std::size_t>(l)];
    Tensor<T> up = L.up[l](engine::resize_nearest(h, skip.dim(2), skip.dim(3)), mode);
    Tensor<T> s = L.skips[l][1](L.skips[l][0](skip, mode), mode);
    h = L.fuse[l](engine::concat_channels<T>({up, s}), mode);
  }
  h = L.head(engine::resize_nearest(h, x.dim(2), x.dim(3)), mode);
  Tensor<T> logits = L.sp_out(h);
  return {logits, cfg_.ffu_source == FfuSource::kStem ? stem : stage1, deepest};
}

template <typename T>
Tensor<T> MattingModel<T>::tcp_forward(const Tensor<T>& x, const Tensor<T>& shallow, NormMode mode,
                                       std::vector<Shape>* activations) {
  if (!cfg_.tcp_enabled) throw std::logic_error("tcp_forward called on a baseline model");
  if (x.rank() != 4 || x.dim(1) != kInputChannels) {
    throw DimensionError("tcp_forward expects N x 6 x H x W, got " + engine::shape_str(x.shape()));
  }
  if (shallow.rank() != 4 || shallow.dim(0) != x.dim(0) || shallow.dim(2) > x.dim(2) ||
      shallow.dim(3) > x.dim(3)) {
    throw DimensionError("tcp_forward: shallow features " + engine::shape_str(shallow.shape()) +
                         " incompatible with input " + engine::shape_str(x.shape()));
  }
  auto& L = *layers_;
  auto record = [activations](const Tensor<T>& t) {
    if (activations) activations->push_back(t.shape());
    return t;
  };
  const std::size_t H = x.dim(2), W = x.dim(3);
  Tensor<T> h = record(L.tcp_bn0(record(engine::relu(record(L.tcp_conv0(x)))), mode));
  for (const auto& block : L.tcp_blocks) h = block(h, mode, activations);

  Tensor<T> fused = record(engine::resize_nearest(shallow, H, W));
  fused = record(engine::scale(record(L.ffu_proj(fused)), L.w_c));
  h = record(engine::add(h, fused));

  h = record(L.refine_bn(record(engine::relu(record(L.refine_conv(h)))), mode));
  return record(L.tcp_out(h));
}

template <typename T>
ForwardTrace<T> MattingModel<T>::forward(const Tensor<T>& sp_input, const Tensor<T>& tcp_input,
                                         NormMode mode) {
  if (sp_input.shape() != tcp_input.shape()) {
    throw DimensionError("forward: SP input " + engine::shape_str(sp_input.shape()) +
                         " and TCP input " + engine::shape_str(tcp_input.shape()) + " differ");
  }
  ForwardTrace<T> trace;
  auto sp = sp_forward(sp_input, mode);
  trace.sp_logits = sp.logits;
  trace.shallow = sp.shallow;
  Tensor<T> z = sp.logits;
  if (cfg_.tcp_enabled) {
    trace.tcp_logits = tcp_forward(tcp_input, sp.shallow, mode, &trace.tcp_activations);
    z = engine::add(z, trace.tcp_logits);
  }
  trace.alpha_pred = engine::clamp(engine::tanh(z), T(0), T(1));
  engine::check_finite(trace.sp_logits, "semantic path logits");
  if (trace.tcp_logits.defined()) engine::check_finite(trace.tcp_logits, "texture path logits");
  return trace;
}

template <typename T>
Tensor<T> make_input(const imaging::Image& image, const trimap::Trimap& trimap) {
  if (trimap.height != image.height || trimap.width != image.width) {
    throw DimensionError("image and trimap sizes differ");
  }
  const std::size_t plane = image.pixels();
  std::vector<T> data(kInputChannels * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) data[c * plane + p] = static_cast<T>(image.values[p * 3 + c]);
    data[(3 + static_cast<std::size_t>(trimap.labels[p])) * plane + p] = T(1);
  }
  return Tensor<T>({1, kInputChannels, image.height, image.width}, std::move(data));
}

template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items) {
  if (items.empty()) throw DimensionError("stack_batch: no items");
  Shape item_shape = items[0].shape();
  std::vector<T> data;
  for (const auto& t : items) {
    if (t.shape() != item_shape || t.dim(0) != 1) {
      throw DimensionError("stack_batch: item " + engine::shape_str(t.shape()) + " vs " +
                           engine::shape_str(item_shape));
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  item_shape[0] = items.size();
  return Tensor<T>(item_shape, std::move(data));
}

template <typename T>
PaddedInput<T> pad_to_stride(const Tensor<T>& input, std::size_t stride) {
  if (input.rank() != 4) throw DimensionError("pad_to_stride expects NCHW");
  const std::size_t h = input.dim(2), w = input.dim(3);
  if (h < 1 || w < 1) throw DimensionError("pad_to_stride: empty input");
  const std::size_t ph = (h + stride - 1) / stride * stride, pw = (w + stride - 1) / stride * stride;
  if (ph == h && pw == w) return {input, h, w};
  const std::size_t planes = input.dim(0) * input.dim(1);
  std::vector<T> data(planes * ph * pw);
  auto src = input.data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < ph; ++y) {
      const std::size_t sy = imaging::reflect_index(static_cast<long>(y), h);
      for (std::size_t x = 0; x < pw; ++x) {
        data[(p * ph + y) * pw + x] = src[(p * h + sy) * w + imaging::reflect_index(static_cast<long>(x), w)];
      }
    }
  }
  return {Tensor<T>({input.dim(0), input.dim(1), ph, pw}, std::move(data)), h, w};
}

template <typename T>
ForwardTrace<T> model_forward(MattingModel<T>& model, const imaging::Image& image,
                              const trimap::TrimapPair& pair, NormMode mode) {
  auto sp_in = pad_to_stride(make_input<T>(image, pair.sp));
  auto tcp_in = pad_to_stride(make_input<T>(image, pair.tcp));
  auto trace = model.forward(sp_in.tensor, tcp_in.tensor, mode);
  const std::size_t h = image.height, w = image.width;
  if (trace.alpha_pred.dim(2) != h || trace.alpha_pred.dim(3) != w) {
    trace.sp_logits = engine::crop(trace.sp_logits, h, w);
    if (trace.tcp_logits.defined()) trace.tcp_logits = engine::crop(trace.tcp_logits, h, w);
    trace.alpha_pred = engine::crop(trace.alpha_pred, h, w);
  }
  return trace;
}

template <typename T>
imaging::AlphaMatte predict_matte(const Tensor<T>& alpha_pred, const trimap::Trimap& sp_trimap) {
  if (alpha_pred.rank() != 4 || alpha_pred.dim(0) != 1 || alpha_pred.dim(1) != 1 ||
      alpha_pred.dim(2) != sp_trimap.height || alpha_pred.dim(3) != sp_trimap.width) {
    throw DimensionError("predict_matte: prediction " + engine::shape_str(alpha_pred.shape()) +
                         " does not match the trimap");
  }
  imaging::AlphaMatte out(sp_trimap.height, sp_trimap.width);
  auto pred = alpha_pred.data();
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    switch (sp_trimap.labels[i]) {
      case trimap::Label::kForeground: out.values[i] = 1.0; break;
      case trimap::Label::kBackground: out.values[i] = 0.0; break;
      case trimap::Label::kUnknown: out.values[i] = static_cast<double>(pred[i]); break;
    }
  }
  return out;
}

namespace {

constexpr const char* kMetaName = "meta/model_config";

template <typename T>
engine::NamedArray to_array(const std::string& name, const Shape& shape, std::span<const T> data) {
  return {name, shape, std::vector<float>(data.begin(), data.end())};
}

template <typename T>
void copy_into(const engine::NamedArray& e, Tensor<T> t) {
  if (e.shape != t.shape()) {
    throw DataError("checkpoint entry " + e.name + " has shape " + engine::shape_str(e.shape) +
                    ", model expects " + engine::shape_str(t.shape()));
  }
  std::transform(e.data.begin(), e.data.end(), t.data().begin(), [](float v) { return static_cast<T>(v); });
}

}  // namespace

template <typename T>
std::vector<engine::NamedArray> export_state(const MattingModel<T>& model,
                                             const engine::AdamState<T>* optimizer) {
  std::vector<engine::NamedArray> out;
  const auto& cfg = model.config();
  out.push_back({kMetaName, {9},
                 {static_cast<float>(cfg.base_width), static_cast<float>(cfg.encoder_blocks[0]),
                  static_cast<float>(cfg.encoder_blocks[1]), static_cast<float>(cfg.encoder_blocks[2]),
                  static_cast<float>(cfg.encoder_blocks[3]), static_cast<float>(cfg.tcp_width),
                  cfg.tcp_enabled ? 1.0f : 0.0f, static_cast<float>(static_cast<int>(cfg.ffu_source)),
                  cfg.zero_init_output ? 1.0f : 0.0f}});
  const auto& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& t = store.tensors()[i];
    out.push_back(to_array<T>(store.names()[i], t.shape(), t.data()));
  }
  for (const auto& b : store.buffers()) out.push_back(to_array<T>(b.name, b.tensor.shape(), b.tensor.data()));
  if (optimizer && !optimizer->first_moment.empty()) {
    const std::string prefix(engine::kOptimizerPrefix);
    out.push_back({prefix + "step", {1}, {static_cast<float>(optimizer->step)}});
    for (std::size_t i = 0; i < store.size(); ++i) {
      const auto& shape = store.tensors()[i].shape();
      out.push_back(to_array<T>(prefix + "m/" + store.names()[i], shape,
                                std::span<const T>(optimizer->first_moment[i])));
      out.push_back(to_array<T>(prefix + "v/" + store.names()[i], shape,
                                std::span<const T>(optimizer->second_moment[i])));
    }
  }
  return out;
}

ModelConfig config_from_state(const std::vector<engine::NamedArray>& state) {
  const auto* meta = engine::find_entry(state, kMetaName);
  if (!meta || meta->data.size() != 9) throw DataError("checkpoint lacks a model configuration");
  ModelConfig cfg;
  auto u = [&](std::size_t i) { return static_cast<std::size_t>(meta->data[i]); };
  cfg.base_width = u(0);
  cfg.encoder_blocks = {u(1), u(2), u(3), u(4)};
  cfg.tcp_width = u(5);
  cfg.tcp_enabled = meta->data[6] != 0.0f;
  cfg.ffu_source = static_cast<FfuSource>(static_cast<int>(meta->data[7]));
  cfg.zero_init_output = meta->data[8] != 0.0f;
  return cfg;
}

template <typename T>
void import_state(MattingModel<T>& model, const std::vector<engine::NamedArray>& state,
                  engine::AdamState<T>* optimizer) {
  auto& store = model.params();
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto* e = engine::find_entry(state, store.names()[i]);
    if (!e) throw DataError("checkpoint is missing parameter " + store.names()[i]);
    copy_into(*e, store.tensors()[i]);
  }
  for (const auto& b : store.buffers()) {
    const auto* e = engine::find_entry(state, b.name);
    if (!e) throw DataError("checkpoint is missing buffer " + b.name);
    copy_into(*e, b.tensor);
  }
  const std::string prefix(engine::kOptimizerPrefix);
  const auto* step = engine::find_entry(state, prefix + "step");
  if (!optimizer || !step) return;
  optimizer->step = static_cast<std::int64_t>(step->data.at(0));
  optimizer->first_moment.assign(store.size(), {});
  optimizer->second_moment.assign(store.size(), {});
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto* m = engine::find_entry(state, prefix + "m/" + store.names()[i]);
    const auto* v = engine::find_entry(state, prefix + "v/" + store.names()[i]);
    if (!m || !v || m->data.size() != store.tensors()[i].numel() || v->data.size() != m->data.size()) {
      throw DataError("checkpoint optimizer state incomplete for " + store.names()[i]);
    }
    optimizer->first_moment[i].assign(m->data.begin(), m->data.end());
    optimizer->second_moment[i].assign(v->data.begin(), v->data.end());
  }
}

#define MF_INSTANTIATE(T)                                                                          \
  template class MattingModel<T>;                                                                  \
  template Tensor<T> make_input<T>(const imaging::Image&, const trimap::Trimap&);                  \
  template Tensor<T> stack_batch(const std::vector<Tensor<T>>&);                                   \
  template PaddedInput<T> pad_to_stride(const Tensor<T>&, std::size_t);                            \
  template ForwardTrace<T> model_forward(MattingModel<T>&, const imaging::Image&,                  \
                                         const trimap::TrimapPair&, NormMode);                     \
  template imaging::AlphaMatte predict_matte(const Tensor<T>&, const trimap::Trimap&);             \
  template std::vector<engine::NamedArray> export_state(const MattingModel<T>&,                    \
                                                        const engine::AdamState<T>*);              \
  template void import_state(MattingModel<T>&, const std::vector<engine::NamedArray>&,             \
                             engine::AdamState<T>*);

MF_INSTANTIATE(float)
MF_INSTANTIATE(double)
#undef MF_INSTANTIATE

}  // namespace mf::model
