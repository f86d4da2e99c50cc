#include "matteforge/pipeline/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "matteforge/engine/checkpoint.hpp"
#include "matteforge/error.hpp"
#include "matteforge/loss/loss.hpp"

namespace mf::pipeline {

using engine::Tensor;

std::string step_record_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["lr"] = r.lr;
  j["loss"] = r.loss;
  j["loss_alpha"] = r.loss_alpha;
  j["loss_bg"] = r.loss_bg;
  j["skipped"] = r.skipped;
  j["ids"] = r.ids;
  j["sp_hash"] = r.sp_hashes;
  j["tcp_hash"] = r.tcp_hashes;
  return j.dump();
}

template <typename T>
Trainer<T>::Trainer(TrainConfig cfg, std::shared_ptr<const TrainingSource> source)
    : cfg_(std::move(cfg)), source_(std::move(source)), model_(cfg_.model, cfg_.seed) {
  if (!source_ || source_->size() == 0) throw DataError("training set is empty");
  schedule_ = {cfg_.base_lr, cfg_.warmup_steps, cfg_.total_steps, cfg_.min_lr};
  engine::lr_at(schedule_, 0);  // validates the schedule
}

template <typename T>
Trainer<T>::~Trainer() {
  if (prefetch_ && prefetch_->valid()) prefetch_->wait();
}

template <typename T>
Batch Trainer<T>::next_batch() {
  Batch batch;
  if (prefetch_ && prefetch_->valid()) {
    batch = prefetch_->get();
    prefetch_.reset();
  } else {
    batch = assemble_batch(cfg_, *source_, step_);
  }
  if (batch.step != step_) batch = assemble_batch(cfg_, *source_, step_);
  if (!cfg_.deterministic && cfg_.workers > 1 && step_ + 1 < cfg_.total_steps) {
    const std::int64_t next = step_ + 1;
    prefetch_ = std::async(std::launch::async,
                           [cfg = cfg_, src = source_, next] { return assemble_batch(cfg, *src, next); });
  }
  return batch;
}

template <typename T>
StepRecord Trainer<T>::step() {
  if (done()) throw std::logic_error("training already finished");
  Batch batch = next_batch();

  StepRecord rec;
  rec.step = step_;
  rec.lr = engine::lr_at(schedule_, step_);
  std::vector<Tensor<T>> sp_items, tcp_items;
  const std::size_t h = batch.items.front().alpha.height, w = batch.items.front().alpha.width;
  std::vector<T> gt_values;
  loss::PixelMask unknown;
  for (const auto& it : batch.items) {
    rec.ids.push_back(it.id);
    rec.sp_hashes.push_back(trimap_hash(it.trimaps.sp));
    rec.tcp_hashes.push_back(trimap_hash(it.trimaps.tcp));
    sp_items.push_back(model::make_input<T>(it.image, it.trimaps.sp));
    tcp_items.push_back(model::make_input<T>(it.image, it.trimaps.tcp));
    for (double a : it.alpha.values) gt_values.push_back(static_cast<T>(a));
    for (auto l : it.trimaps.sp.labels) unknown.push_back(l == trimap::Label::kUnknown ? 1 : 0);
  }
  const std::size_t n = batch.items.size();
  const Tensor<T> gt({n, 1, h, w}, std::move(gt_values));

  try {
    auto& params = model_.params();
    params.zero_grad();
    auto trace = model_.forward(model::stack_batch(sp_items), model::stack_batch(tcp_items),
                                engine::NormMode::kTrain);
    Tensor<T> l_alpha;
    try {
      l_alpha = loss::alpha_prediction_loss(gt, trace.alpha_pred, unknown, cfg_.loss.epsilon);
    } catch (const EmptyRegionError&) {
      rec.skipped = true;
      ++step_;
      return rec;
    }
    // Without IMRP the background term is dropped along with the perturbation.
    const double w_bg = cfg_.imrp ? cfg_.loss.w_bg : 0.0;
    Tensor<T> l_bg = cfg_.imrp ? loss::background_enhancement_loss(gt, trace.alpha_pred, unknown,
                                                                   cfg_.loss.bg_threshold, cfg_.loss.epsilon)
                               : Tensor<T>::scalar(T(0));
    Tensor<T> total = loss::total_loss(l_alpha, l_bg, cfg_.loss.w_alpha, w_bg);
    rec.loss_alpha = static_cast<double>(l_alpha.item());
    rec.loss_bg = static_cast<double>(l_bg.item());
    rec.loss = static_cast<double>(total.item());
    engine::backward(total);
    engine::adam_step(std::span<Tensor<T>>(params.tensors()), opt_, rec.lr);
    for (std::size_t i = 0; i < params.size(); ++i) {
      engine::check_finite(params.tensors()[i], "parameter " + params.names()[i]);
    }
  } catch (const NumericalError& e) {
    std::string where;
    if (!cfg_.out_dir.empty()) {
      const auto dump = cfg_.out_dir / ("abort_step_" + std::to_string(step_) + ".mfck");
      try {
        std::filesystem::create_directories(cfg_.out_dir);
        save_checkpoint(dump);
        where = "; state dumped to " + dump.string();
      } catch (const std::exception&) {
        where = "; state dump failed";
      }
    }
    throw NumericalError("training step " + std::to_string(step_) + ": " + e.what() + where);
  }
  ++step_;
  return rec;
}

template <typename T>
std::vector<StepRecord> Trainer<T>::run(std::ostream* log, std::int64_t log_every) {
  std::vector<StepRecord> records;
  std::filesystem::create_directories(cfg_.out_dir);
  {
    std::ofstream cfg_out(cfg_.out_dir / "config.json");
    cfg_out << config_to_json(cfg_);
  }
  std::ofstream jsonl(cfg_.out_dir / "train_log.jsonl", step_ == 0 ? std::ios::trunc : std::ios::app);
  char line[256];
  while (!done()) {
    StepRecord r = step();
    jsonl << step_record_json(r) << '\n';
    if (log && (r.step % log_every == 0 || done())) {
      std::snprintf(line, sizeof line, "step %lld/%lld lr %.3e loss %.6f l_alpha %.6f l_bg %.6f%s\n",
                    static_cast<long long>(r.step + 1), static_cast<long long>(cfg_.total_steps), r.lr,
                    r.loss, r.loss_alpha, r.loss_bg, r.skipped ? " (skipped: no unknown pixels)" : "");
      *log << line << std::flush;
    }
    if (cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0 && !done()) {
      save_checkpoint(cfg_.out_dir / ("step_" + std::to_string(step_) + ".mfck"));
    }
    records.push_back(std::move(r));
  }
  save_checkpoint(cfg_.out_dir / "final.mfck");
  return records;
}

template <typename T>
void Trainer<T>::save_checkpoint(const std::filesystem::path& path) const {
  auto state = model::export_state(model_, &opt_);
  state.push_back({kTrainStepEntry, {1}, {static_cast<float>(step_)}});
  engine::write_archive(path, state);
}

template <typename T>
void Trainer<T>::load_checkpoint(const std::filesystem::path& path) {
  const auto state = engine::read_archive(path);
  model::import_state(model_, state, &opt_);
  const auto* s = engine::find_entry(state, kTrainStepEntry);
  step_ = s ? static_cast<std::int64_t>(s->data.at(0)) : opt_.step;
  prefetch_.reset();
}

template class Trainer<float>;
template class Trainer<double>;

}  // namespace mf::pipeline
