#include "layers.hpp"

#include <cmath>

namespace mf::model::detail {

template <typename T>
Conv<T> Conv<T>::make(ParamStore<T>& store, const std::string& name, std::size_t in,
                      std::size_t out, std::size_t kernel, std::size_t stride, bool with_bias,
                      Rng& rng, Init init) {
  const std::size_t fan_in = in * kernel * kernel;
  std::vector<T> w(out * fan_in, T(0));
  if (init == Init::kKaiming) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : w) v = static_cast<T>(dist(rng));
  }
  Conv c;
  c.weight = store.add(name + "/w", Tensor<T>({out, in, kernel, kernel}, std::move(w)));
  if (with_bias) c.bias = store.add(name + "/b", Tensor<T>::zeros({out}));
  c.stride = stride;
  c.padding = kernel / 2;
  return c;
}

template <typename T>
Norm<T> Norm<T>::make(ParamStore<T>& store, const std::string& name, std::size_t channels) {
  Norm n;
  n.gamma = store.add(name + "/gamma", Tensor<T>::full({channels}, T(1)));
  n.beta = store.add(name + "/beta", Tensor<T>::zeros({channels}));
  n.stats = &store.add_stats(name, channels);
  return n;
}

template <typename T>
BasicBlock<T> BasicBlock<T>::make(ParamStore<T>& store, const std::string& name, std::size_t in,
                                  std::size_t out, std::size_t stride, Rng& rng) {
  BasicBlock b;
  b.conv1 = Conv<T>::make(store, name + "/conv1", in, out, 3, stride, false, rng);
  b.bn1 = Norm<T>::make(store, name + "/bn1", out);
  b.conv2 = Conv<T>::make(store, name + "/conv2", out, out, 3, 1, false, rng);
  b.bn2 = Norm<T>::make(store, name + "/bn2", out);
  if (stride != 1 || in != out) {
    b.has_down = true;
    b.down = Conv<T>::make(store, name + "/down/conv", in, out, 1, stride, false, rng);
    b.down_bn = Norm<T>::make(store, name + "/down/bn", out);
  }
  return b;
}

template <typename T>
Tensor<T> BasicBlock<T>::operator()(const Tensor<T>& x, NormMode mode) const {
  Tensor<T> h = engine::relu(bn1(conv1(x), mode));
  h = bn2(conv2(h), mode);
  Tensor<T> shortcut = has_down ? down_bn(down(x), mode) : x;
  return engine::relu(engine::add(h, shortcut));
}

template <typename T>
TextureBlock<T> TextureBlock<T>::make(ParamStore<T>& store, const std::string& name,
                                      std::size_t width, Rng& rng) {
  TextureBlock b;
  b.conv1 = Conv<T>::make(store, name + "/conv1", width, width, 3, 1, false, rng);
  b.bn1 = Norm<T>::make(store, name + "/bn1", width);
  b.conv2 = Conv<T>::make(store, name + "/conv2", width, width, 3, 1, false, rng);
  b.bn2 = Norm<T>::make(store, name + "/bn2", width);
  return b;
}

template <typename T>
Tensor<T> TextureBlock<T>::operator()(const Tensor<T>& x, NormMode mode,
                                      std::vector<engine::Shape>* trace) const {
  auto record = [trace](const Tensor<T>& t) {
    if (trace) trace->push_back(t.shape());
    return t;
  };
  Tensor<T> h = record(bn1(record(engine::relu(record(conv1(x)))), mode));
  h = record(bn2(record(engine::relu(record(conv2(h)))), mode));
  return record(engine::add(x, h));
}

template struct Conv<float>;
template struct Conv<double>;
template struct Norm<float>;
template struct Norm<double>;
template struct BasicBlock<float>;
template struct BasicBlock<double>;
template struct TextureBlock<float>;
template struct TextureBlock<double>;

}  // namespace mf::model::detail
