#include "matteforge/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace mf::metrics {
namespace {

void check_sizes(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& t) {
  if (!pred.same_size(gt.height, gt.width) || t.height != gt.height || t.width != gt.width) {
    throw DimensionError("metric inputs differ in size");
  }
}

bool in_unknown(const Trimap& t, std::size_t i) { return t.labels[i] == trimap::Label::kUnknown; }

// Half-sample symmetric extension: -1 -> 0, n -> n - 1.
long symmetric(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// Correlates each row (horizontal) or column with `taps`.
std::vector<double> filter_axis(const std::vector<double>& src, std::size_t h, std::size_t w,
                                const std::vector<double>& taps, int radius, bool horizontal) {
  std::vector<double> out(src.size());
#pragma omp parallel for schedule(static)
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        const std::size_t sy = horizontal ? y : static_cast<std::size_t>(symmetric(static_cast<long>(y) + k, static_cast<long>(h)));
        const std::size_t sx = horizontal ? static_cast<std::size_t>(symmetric(static_cast<long>(x) + k, static_cast<long>(w))) : x;
        acc += taps[static_cast<std::size_t>(k + radius)] * src[sy * w + sx];
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

double sad(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& t) {
  check_sizes(gt, pred, t);
  double acc = 0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    if (in_unknown(t, i)) acc += std::abs(gt.values[i] - pred.values[i]);
  }
  return acc / 1000.0;
}

std::optional<double> mse(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& t) {
  check_sizes(gt, pred, t);
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    if (!in_unknown(t, i)) continue;
    const double d = gt.values[i] - pred.values[i];
    acc += d * d;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return acc / static_cast<double>(n);
}

DerivativeFilter make_derivative_filter(double sigma) {
  DerivativeFilter f;
  f.radius = static_cast<int>(std::ceil(3.0 * sigma));
  double s_sum = 0, d_sum = 0;
  for (int x = -f.radius; x <= f.radius; ++x) {
    const double g = std::exp(-0.5 * x * x / (sigma * sigma));
    const double dg = -x / (sigma * sigma) * g;
    f.smooth.push_back(g);
    f.derivative.push_back(dg);
    s_sum += g;
    d_sum += std::abs(dg);
  }
  for (auto& v : f.smooth) v /= s_sum;
  for (auto& v : f.derivative) v /= d_sum;
  return f;
}

std::vector<double> gradient_magnitude(const AlphaMatte& a, double sigma) {
  const auto f = make_derivative_filter(sigma);
  const std::size_t h = a.height, w = a.width;
  const auto gx = filter_axis(filter_axis(a.values, h, w, f.derivative, f.radius, true), h, w,
                              f.smooth, f.radius, false);
  const auto gy = filter_axis(filter_axis(a.values, h, w, f.smooth, f.radius, true), h, w,
                              f.derivative, f.radius, false);
  std::vector<double> mag(a.values.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
  return mag;
}

double gradient_error(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& t, double sigma) {
  check_sizes(gt, pred, t);
  const auto g_gt = gradient_magnitude(gt, sigma);
  const auto g_pred = gradient_magnitude(pred, sigma);
  double acc = 0;
  for (std::size_t i = 0; i < g_gt.size(); ++i) {
    if (in_unknown(t, i)) acc += (g_gt[i] - g_pred[i]) * (g_gt[i] - g_pred[i]);
  }
  return acc / 1000.0;
}

std::vector<double> connectivity_levels(const AlphaMatte& gt, const AlphaMatte& pred, double step) {
  const std::size_t h = gt.height, w = gt.width, n = h * w;
  const long divisions = std::lround(1.0 / step);
  std::vector<double> level_of(n, 0.0);
  std::vector<int> label(n);
  std::deque<std::size_t> queue;
  for (long k = 1; k < divisions; ++k) {
    const double level = static_cast<double>(k) / static_cast<double>(divisions);
    std::fill(label.begin(), label.end(), -1);
    int next = 0, best = -1;
    std::size_t best_size = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (label[s] != -1 || gt.values[s] < level || pred.values[s] < level) continue;
      std::size_t size = 0;
      label[s] = next;
      queue.push_back(s);
      while (!queue.empty()) {
        const std::size_t p = queue.front();
        queue.pop_front();
        ++size;
        const std::size_t y = p / w, x = p % w;
        const std::size_t nbrs[4] = {y > 0 ? p - w : n, y + 1 < h ? p + w : n, x > 0 ? p - 1 : n,
                                     x + 1 < w ? p + 1 : n};
        for (std::size_t q : nbrs) {
          if (q == n || label[q] != -1 || gt.values[q] < level || pred.values[q] < level) continue;
          label[q] = next;
          queue.push_back(q);
        }
      }
      if (size > best_size) {  // strict: earliest component wins ties
        best_size = size;
        best = next;
      }
      ++next;
    }
    if (best < 0) continue;
    for (std::size_t p = 0; p < n; ++p) {
      if (label[p] == best) level_of[p] = level;
    }
  }
  return level_of;
}

double connectivity_error(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& t, double step,
                          double tolerance) {
  check_sizes(gt, pred, t);
  const auto levels = connectivity_levels(gt, pred, step);
  auto phi = [tolerance](double d) { return d >= tolerance ? 1.0 - d : 1.0; };
  double acc = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!in_unknown(t, i)) continue;
    acc += std::abs(phi(gt.values[i] - levels[i]) - phi(pred.values[i] - levels[i]));
  }
  return acc / 1000.0;
}

SampleMetrics evaluate_sample(const EvalSample& s) {
  SampleMetrics m;
  m.id = s.id;
  m.sad = sad(s.gt, s.pred, s.trimap);
  m.mse = mse(s.gt, s.pred, s.trimap);
  m.grad = gradient_error(s.gt, s.pred, s.trimap);
  m.conn = connectivity_error(s.gt, s.pred, s.trimap);
  return m;
}

MetricReport evaluate(const std::vector<EvalSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  MetricReport r;
  for (const auto& s : samples) check_sizes(s.gt, s.pred, s.trimap);
  r.samples.resize(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < samples.size(); ++i) r.samples[i] = evaluate_sample(samples[i]);
  std::stable_sort(r.samples.begin(), r.samples.end(),
                   [](const SampleMetrics& a, const SampleMetrics& b) { return a.id < b.id; });
  std::size_t defined = 0;
  for (const auto& s : r.samples) {
    r.mean_sad += s.sad;
    r.mean_grad += s.grad;
    r.mean_conn += s.conn;
    if (s.mse) {
      r.mean_mse += *s.mse;
      ++defined;
    } else {
      ++r.undefined_mse;
    }
  }
  const double n = static_cast<double>(r.samples.size());
  r.mean_sad /= n;
  r.mean_grad /= n;
  r.mean_conn /= n;
  r.mean_mse = defined ? r.mean_mse / static_cast<double>(defined) : 0.0;
  return r;
}

}  // namespace mf::metrics
