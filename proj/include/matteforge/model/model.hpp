#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "matteforge/engine/checkpoint.hpp"
#include "matteforge/engine/optim.hpp"
#include "matteforge/engine/params.hpp"
#include "matteforge/imaging/image.hpp"
#include "matteforge/trimap/trimap.hpp"

namespace mf::model {

using engine::NormMode;
using engine::Shape;
using engine::Tensor;

enum class FfuSource : int { kStem = 0, kStage1 = 1 };

struct ModelConfig {
  // Full scale: base_width 64, encoder_blocks {3, 4, 6, 3} (ResNet-34).
  std::size_t base_width = 8;
  std::array<std::size_t, 4> encoder_blocks{1, 1, 1, 1};
  std::size_t tcp_width = 8;
  bool tcp_enabled = true;
  FfuSource ffu_source = FfuSource::kStem;
  bool zero_init_output = false;  // zero the two output convolutions
};

inline constexpr std::size_t kTotalStride = 32;
inline constexpr std::size_t kInputChannels = 6;

template <typename T>
struct ForwardTrace {
  Tensor<T> sp_logits;   // N x 1 x H x W
  Tensor<T> tcp_logits;  // N x 1 x H x W, undefined for the baseline
  Tensor<T> shallow;     // FFU source activation
  Tensor<T> alpha_pred;  // N x 1 x H x W, in [0, 1]
  std::vector<Shape> tcp_activations;
};

/// Dual-path matting network: a U-Net Semantic Path with a residual
/// encoder, and a downsampling-free Textural Compensate Path that fuses
/// resized shallow SP features scaled by the learnable w_c.
template <typename T>
class MattingModel {
 public:
  MattingModel(const ModelConfig& cfg, std::uint64_t seed);
  ~MattingModel();
  MattingModel(MattingModel&&) noexcept;
  MattingModel& operator=(MattingModel&&) noexcept;

  const ModelConfig& config() const { return cfg_; }
  engine::ParamStore<T>& params() { return params_; }
  const engine::ParamStore<T>& params() const { return params_; }

  struct SpOutput {
    Tensor<T> logits;
    Tensor<T> shallow;
    Tensor<T> deepest;
  };
  /// x: N x 6 x H x W with H, W divisible by 32.
  SpOutput sp_forward(const Tensor<T>& x, NormMode mode);

  /// x: N x 6 x H x W (any size). `activations` records the shape of every
  /// intermediate TCP activation.
  Tensor<T> tcp_forward(const Tensor<T>& x, const Tensor<T>& shallow, NormMode mode,
                        std::vector<Shape>* activations = nullptr);

  /// Both inputs N x 6 x H x W with H, W divisible by 32.
  ForwardTrace<T> forward(const Tensor<T>& sp_input, const Tensor<T>& tcp_input, NormMode mode);

  Tensor<T> w_c() const;

 private:
  struct Layers;
  ModelConfig cfg_;
  engine::ParamStore<T> params_;
  std::unique_ptr<Layers> layers_;
};

/// Concatenation of RGB and the one-hot trimap: 1 x 6 x H x W.
template <typename T>
Tensor<T> make_input(const imaging::Image& image, const trimap::Trimap& trimap);

/// Stacks 1 x C x H x W tensors along the batch axis.
template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& items);

template <typename T>
struct PaddedInput {
  Tensor<T> tensor;
  std::size_t height = 0;  // original size, restored by crop
  std::size_t width = 0;
};

/// Reflect-pads right and bottom up to the next multiple of `stride`.
template <typename T>
PaddedInput<T> pad_to_stride(const Tensor<T>& input, std::size_t stride = kTotalStride);

/// Full forward on one image: builds both inputs, pads, runs, and crops
/// every output back to the image size.
template <typename T>
ForwardTrace<T> model_forward(MattingModel<T>& model, const imaging::Image& image,
                              const trimap::TrimapPair& pair, NormMode mode);

/// FG -> 1, BG -> 0, U -> network prediction. `alpha_pred` is 1 x 1 x H x W.
template <typename T>
imaging::AlphaMatte predict_matte(const Tensor<T>& alpha_pred, const trimap::Trimap& sp_trimap);

// Checkpoint state: parameters, normalization buffers, model config under
// "meta/model_config", optimizer moments under "opt/".
template <typename T>
std::vector<engine::NamedArray> export_state(const MattingModel<T>& model,
                                             const engine::AdamState<T>* optimizer = nullptr);

ModelConfig config_from_state(const std::vector<engine::NamedArray>& state);

/// Restores parameters and buffers (and the optimizer when given and
/// present). Throws DataError on missing or mis-shaped entries.
template <typename T>
void import_state(MattingModel<T>& model, const std::vector<engine::NamedArray>& state,
                  engine::AdamState<T>* optimizer = nullptr);

}  // namespace mf::model
