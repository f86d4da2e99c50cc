#pragma once

#include <cstdint>
#include <filesystem>
#include <future>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "matteforge/engine/optim.hpp"
#include "matteforge/model/model.hpp"
#include "matteforge/pipeline/config.hpp"
#include "matteforge/pipeline/dataset.hpp"

namespace mf::pipeline {

struct StepRecord {
  std::int64_t step = 0;
  double lr = 0;
  double loss_alpha = 0;
  double loss_bg = 0;
  double loss = 0;
  bool skipped = false;  // no unknown pixel in the batch
  std::vector<std::string> ids;
  std::vector<std::uint64_t> sp_hashes;
  std::vector<std::uint64_t> tcp_hashes;
};

/// One line of the line-delimited JSON training log.
std::string step_record_json(const StepRecord& r);

/// Name of the training-step counter stored in checkpoints.
inline constexpr const char* kTrainStepEntry = "meta/train_step";

template <typename T>
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::shared_ptr<const TrainingSource> source);
  ~Trainer();

  /// One optimization step. Throws NumericalError on a non-finite loss,
  /// gradient or parameter after writing abort_step_<n>.mfck to out_dir.
  StepRecord step();

  /// Runs the remaining steps, writing periodic and final checkpoints and a
  /// per-step JSON-lines log (train_log.jsonl) into out_dir. Progress goes to `log` every
  /// `log_every` steps.
  std::vector<StepRecord> run(std::ostream* log = nullptr, std::int64_t log_every = 50);

  std::int64_t step_index() const { return step_; }
  bool done() const { return step_ >= cfg_.total_steps; }
  const TrainConfig& config() const { return cfg_; }
  model::MattingModel<T>& model() { return model_; }
  engine::AdamState<T>& optimizer() { return opt_; }

  void save_checkpoint(const std::filesystem::path& path) const;
  /// Restores model, optimizer and step counter.
  void load_checkpoint(const std::filesystem::path& path);

 private:
  Batch next_batch();

  TrainConfig cfg_;
  std::shared_ptr<const TrainingSource> source_;
  model::MattingModel<T> model_;
  engine::AdamState<T> opt_;
  engine::LrSchedule schedule_;
  std::int64_t step_ = 0;
  std::optional<std::future<Batch>> prefetch_;
};

}  // namespace mf::pipeline
