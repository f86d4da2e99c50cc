#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "matteforge/metrics/metrics.hpp"
#include "matteforge/model/model.hpp"
#include "matteforge/pipeline/config.hpp"
#include "matteforge/pipeline/trainer.hpp"

namespace mf::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

struct TrainOutcome {
  fs::path checkpoint;
  std::vector<StepRecord> records;
};

/// Trains per `cfg` (optionally resuming) and writes final.mfck into out_dir.
TrainOutcome train(const TrainConfig& cfg, std::ostream* log = nullptr,
                   const std::optional<fs::path>& resume = std::nullopt);

/// Float model restored from a checkpoint.
model::MattingModel<float> load_model(const fs::path& checkpoint);

/// Predicted matte for one image; the trimap feeds both paths.
template <typename T>
imaging::AlphaMatte predict(model::MattingModel<T>& model, const imaging::Image& image,
                            const trimap::Trimap& trimap);

/// Single file (image, trimap, out) or whole directories (image_dir,
/// trimap_dir, out_dir; files paired by name). Returns mattes written.
struct InferOptions {
  fs::path checkpoint;
  fs::path image, trimap, out;
  fs::path image_dir, trimap_dir, out_dir;
};
std::size_t infer(const InferOptions& opts);

struct EvalOptions {
  fs::path pred_dir;
  fs::path gt_dir;
  fs::path trimap_dir;
  fs::path out;  // report JSON; the text table goes next to it as .txt
};

struct EvalOutcome {
  metrics::MetricReport report;
  std::vector<std::string> missing;  // ground-truth files lacking a prediction or trimap
};

/// Evaluates every ground-truth matte that has a prediction and trimap of
/// the same file name. Throws DataError when no pair is complete.
EvalOutcome eval(const EvalOptions& opts);

struct EvalSet {
  std::vector<std::string> ids;
  std::vector<imaging::Image> images;
  std::vector<imaging::AlphaMatte> alphas;
  std::vector<trimap::Trimap> trimaps;
};

/// comp/, alpha/ and trimap_sp/ of a synthesized dataset directory.
EvalSet load_eval_set(const fs::path& dir);

template <typename T>
metrics::MetricReport evaluate_model(model::MattingModel<T>& model, const EvalSet& set);

struct AblationRow {
  std::string name;
  metrics::MetricReport report;
  fs::path checkpoint;
};

/// Trains the three ablation variants from the same seed and data order,
/// evaluates each on the eval set and writes ablation.json / ablation.txt
/// plus one subdirectory per variant under cfg.out_dir.
std::vector<AblationRow> ablate(const TrainConfig& cfg, std::ostream* log = nullptr);

std::string ablation_to_json(const std::vector<AblationRow>& rows);
std::string ablation_to_table(const std::vector<AblationRow>& rows);

}  // namespace mf::pipeline
