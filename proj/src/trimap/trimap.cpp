#include "matteforge/trimap/trimap.hpp"

#include <algorithm>
#include <cstdlib>

namespace mf::trimap {

std::size_t Trimap::count(Label l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

Mask Trimap::mask(Label l) const {
  Mask m{height, width, std::vector<std::uint8_t>(labels.size())};
  for (std::size_t i = 0; i < labels.size(); ++i) m.bits[i] = labels[i] == l ? 1 : 0;
  return m;
}

Trimap trimap_from_alpha(const imaging::AlphaMatte& alpha) {
  Trimap t(alpha.height, alpha.width);
  for (std::size_t i = 0; i < alpha.values.size(); ++i) {
    const double a = alpha.values[i];
    t.labels[i] = a == 1.0 ? Label::kForeground : (a == 0.0 ? Label::kBackground : Label::kUnknown);
  }
  return t;
}

template <typename T>
engine::Tensor<T> one_hot(const Trimap& t) {
  const std::size_t plane = t.height * t.width;
  std::vector<T> data(3 * plane, T(0));
  for (std::size_t i = 0; i < plane; ++i) data[static_cast<std::size_t>(t.labels[i]) * plane + i] = T(1);
  return engine::Tensor<T>({3, t.height, t.width}, std::move(data));
}

imaging::Gray8 to_gray8(const Trimap& t) {
  imaging::Gray8 g{t.height, t.width, std::vector<std::uint8_t>(t.labels.size())};
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    switch (t.labels[i]) {
      case Label::kBackground: g.bytes[i] = 0; break;
      case Label::kUnknown: g.bytes[i] = 128; break;
      case Label::kForeground: g.bytes[i] = 255; break;
    }
  }
  return g;
}

Trimap from_gray8(const imaging::Gray8& g) {
  Trimap t(g.height, g.width);
  bool snapped = false;
  for (std::size_t i = 0; i < g.bytes.size(); ++i) {
    const int v = g.bytes[i];
    if (v != 0 && v != 128 && v != 255) snapped = true;
    const int d0 = v, d1 = std::abs(v - 128), d2 = 255 - v;
    t.labels[i] = (d0 <= d1 && d0 <= d2) ? Label::kBackground
                                         : (d1 <= d2 ? Label::kUnknown : Label::kForeground);
  }
  if (snapped) log_warning("trimap contains values other than 0/128/255; snapped to nearest label");
  return t;
}

template engine::Tensor<float> one_hot(const Trimap&);
template engine::Tensor<double> one_hot(const Trimap&);

}  // namespace mf::trimap
