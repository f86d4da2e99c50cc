#pragma once

#include <optional>
#include <string>
#include <vector>

#include "matteforge/imaging/image.hpp"
#include "matteforge/trimap/trimap.hpp"

// Matting error metrics over the unknown region of a trimap. SAD, Grad and
// Conn are reported divided by 1000; MSE is the mean over U in [0, 1] units.

namespace mf::metrics {

using imaging::AlphaMatte;
using trimap::Trimap;

inline constexpr double kGradientSigma = 1.4;
inline constexpr double kConnStep = 0.1;
inline constexpr double kConnTolerance = 0.15;

double sad(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& trimap);

/// Undefined (nullopt) when U is empty.
std::optional<double> mse(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& trimap);

double gradient_error(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& trimap,
                      double sigma = kGradientSigma);

double connectivity_error(const AlphaMatte& gt, const AlphaMatte& pred, const Trimap& trimap,
                          double step = kConnStep, double tolerance = kConnTolerance);

/// Gaussian and first-derivative-of-Gaussian taps on [-r, r], r = ceil(3
/// sigma), each L1-normalized.
struct DerivativeFilter {
  std::vector<double> smooth;
  std::vector<double> derivative;
  int radius = 0;
};
DerivativeFilter make_derivative_filter(double sigma);

/// sqrt(gx^2 + gy^2) of the filtered matte, symmetric (edge-repeating)
/// borders.
std::vector<double> gradient_magnitude(const AlphaMatte& a, double sigma = kGradientSigma);

/// Largest level index i (level = i * step) at which each pixel belongs to
/// the largest 4-connected component of {gt >= level} & {pred >= level};
/// returned as the level value, 0 where never connected.
std::vector<double> connectivity_levels(const AlphaMatte& gt, const AlphaMatte& pred, double step);

struct SampleMetrics {
  std::string id;
  double sad = 0;
  std::optional<double> mse;
  double grad = 0;
  double conn = 0;
};

struct EvalSample {
  std::string id;
  AlphaMatte gt;
  AlphaMatte pred;
  Trimap trimap;
};

struct MetricReport {
  std::vector<SampleMetrics> samples;  // sorted by id
  double mean_sad = 0;
  double mean_mse = 0;
  double mean_grad = 0;
  double mean_conn = 0;
  std::size_t undefined_mse = 0;  // samples excluded from mean_mse
};

SampleMetrics evaluate_sample(const EvalSample& s);

/// Per-sample metrics (evaluated in parallel) plus unweighted means.
MetricReport evaluate(const std::vector<EvalSample>& samples);

std::string report_to_json(const MetricReport& report);
std::string report_to_table(const MetricReport& report);

}  // namespace mf::metrics
