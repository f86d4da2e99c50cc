#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "matteforge/error.hpp"
#include "matteforge/imaging/crop.hpp"
#include "matteforge/loss/loss.hpp"
#include "matteforge/model/model.hpp"
#include "matteforge/trimap/trimap.hpp"

namespace mf::pipeline {

// Full-scale recipe, kept for reference; the small defaults below are
// what runs unless a config overrides them.
inline constexpr std::int64_t kFullScaleTotalSteps = 300000;
inline constexpr std::int64_t kFullScaleWarmupSteps = 7500;
inline constexpr std::size_t kFullScaleBatchSize = 24;

enum class Precision { kFloat32, kFloat64 };

struct TrainConfig {
  std::int64_t total_steps = 2000;
  std::int64_t warmup_steps = 50;
  std::size_t batch_size = 4;
  double base_lr = 4e-4;
  double min_lr = 0.0;
  loss::LossConfig loss;
  model::ModelConfig model;
  trimap::TrimapGenConfig trimap;
  imaging::CropConfig crop{{64, 96, 128}, 64, true};
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  bool imrp = true;                   // TCP trimap perturbation + background loss
  Precision precision = Precision::kFloat32;
  bool deterministic = false;
  std::size_t workers = 2;  // batch-assembly threads when not deterministic

  // Either a synthesized dataset (manifest.json) or raw fg/alpha/bg
  // directories composed on the fly.
  std::filesystem::path data_dir;
  std::filesystem::path fg_dir;
  std::filesystem::path alpha_dir;
  std::filesystem::path bg_dir;
  std::filesystem::path eval_dir;  // ablation evaluation set; defaults to data_dir
  std::filesystem::path out_dir = "run";
};

/// Missing keys keep their defaults; unknown keys throw DataError.
TrainConfig load_config(const std::filesystem::path& path);
TrainConfig config_from_json(const std::string& text);
std::string config_to_json(const TrainConfig& cfg);

struct AblationVariant {
  std::string name;
  bool tcp_enabled;
  bool imrp;
};

/// Row order of the ablation table.
inline const std::array<AblationVariant, 3> kAblationVariants{{
    {"baseline", false, false},
    {"baseline+TCP", true, false},
    {"baseline+TCP+IMRP", true, true},
}};

/// Applies a variant: IMRP off means TCP trimap = SP trimap and w_bg = 0.
TrainConfig apply_variant(TrainConfig cfg, const AblationVariant& v);

}  // namespace mf::pipeline
