#include "matteforge/pipeline/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "matteforge/engine/checkpoint.hpp"
#include "matteforge/error.hpp"
#include "matteforge/imaging/png_io.hpp"

namespace mf::pipeline {
namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  os << text;
  if (!os) throw DataError("cannot write " + path.string());
}

trimap::Trimap load_trimap(const fs::path& path) { return trimap::from_gray8(imaging::load_gray8(path)); }

template <typename T>
TrainOutcome train_impl(const TrainConfig& cfg, std::shared_ptr<const TrainingSource> source,
                        std::ostream* log, const std::optional<fs::path>& resume,
                        model::MattingModel<T>* out_model = nullptr) {
  Trainer<T> trainer(cfg, std::move(source));
  if (resume) trainer.load_checkpoint(*resume);
  TrainOutcome outcome;
  outcome.records = trainer.run(log);
  outcome.checkpoint = cfg.out_dir / "final.mfck";
  if (out_model) *out_model = std::move(trainer.model());
  return outcome;
}

template <typename T>
AblationRow ablate_variant(const TrainConfig& cfg, std::shared_ptr<const TrainingSource> source,
                           const EvalSet& set, const std::string& name, std::ostream* log) {
  model::MattingModel<T> trained(cfg.model, cfg.seed);
  AblationRow row;
  row.name = name;
  row.checkpoint = train_impl<T>(cfg, std::move(source), log, std::nullopt, &trained).checkpoint;
  row.report = evaluate_model(trained, set);
  return row;
}

}  // namespace

TrainOutcome train(const TrainConfig& cfg, std::ostream* log, const std::optional<fs::path>& resume) {
  std::shared_ptr<const TrainingSource> source = open_source(cfg);
  if (cfg.precision == Precision::kFloat64) return train_impl<double>(cfg, source, log, resume);
  return train_impl<float>(cfg, source, log, resume);
}

model::MattingModel<float> load_model(const fs::path& checkpoint) {
  const auto state = engine::read_archive(checkpoint);
  model::MattingModel<float> m(model::config_from_state(state), 0);
  model::import_state(m, state);
  return m;
}

template <typename T>
imaging::AlphaMatte predict(model::MattingModel<T>& model, const imaging::Image& image,
                            const trimap::Trimap& trimap) {
  if (trimap.height != image.height || trimap.width != image.width) {
    throw DataError("trimap size differs from image size");
  }
  const auto trace = model::model_forward(model, image, trimap::TrimapPair{trimap, trimap},
                                          engine::NormMode::kEval);
  return model::predict_matte(trace.alpha_pred, trimap);
}

std::size_t infer(const InferOptions& o) {
  auto model = load_model(o.checkpoint);
  if (!o.image.empty()) {
    if (o.trimap.empty() || o.out.empty()) throw std::invalid_argument("infer needs --trimap and --out with --image");
    const auto matte = predict(model, imaging::load_image(o.image), load_trimap(o.trimap));
    if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
    imaging::save_png(o.out, matte);
    return 1;
  }
  if (o.image_dir.empty() || o.trimap_dir.empty() || o.out_dir.empty()) {
    throw std::invalid_argument("infer needs --image/--trimap/--out or --image-dir/--trimap-dir/--out-dir");
  }
  fs::create_directories(o.out_dir);
  std::size_t written = 0;
  for (const auto& img : list_pngs(o.image_dir)) {
    const fs::path tri = o.trimap_dir / img.filename();
    if (!fs::exists(tri)) throw DataError("no trimap for " + img.filename().string());
    imaging::save_png(o.out_dir / img.filename(), predict(model, imaging::load_image(img), load_trimap(tri)));
    ++written;
  }
  return written;
}

EvalOutcome eval(const EvalOptions& o) {
  EvalOutcome outcome;
  std::vector<metrics::EvalSample> samples;
  for (const auto& gt : list_pngs(o.gt_dir)) {
    const fs::path pred = o.pred_dir / gt.filename();
    const fs::path tri = o.trimap_dir / gt.filename();
    if (!fs::exists(pred) || !fs::exists(tri)) {
      outcome.missing.push_back(gt.filename().string());
      continue;
    }
    metrics::EvalSample s{gt.stem().string(), imaging::load_alpha(gt), imaging::load_alpha(pred),
                          load_trimap(tri)};
    if (!s.pred.same_size(s.gt.height, s.gt.width) || s.trimap.height != s.gt.height ||
        s.trimap.width != s.gt.width) {
      throw DataError("size mismatch for " + gt.filename().string());
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("no complete prediction / ground truth / trimap triple");
  outcome.report = metrics::evaluate(samples);
  if (!o.out.empty()) {
    write_text(o.out, metrics::report_to_json(outcome.report));
    fs::path txt = o.out;
    txt.replace_extension(".txt");
    write_text(txt, metrics::report_to_table(outcome.report));
  }
  return outcome;
}

EvalSet load_eval_set(const fs::path& dir) {
  EvalSet set;
  for (const auto& comp : list_pngs(dir / "comp")) {
    const auto name = comp.filename();
    set.ids.push_back(comp.stem().string());
    set.images.push_back(imaging::load_image(comp));
    set.alphas.push_back(imaging::load_alpha(dir / "alpha" / name));
    set.trimaps.push_back(load_trimap(dir / "trimap_sp" / name));
  }
  if (set.ids.empty()) throw DataError("evaluation set " + dir.string() + " is empty");
  return set;
}

template <typename T>
metrics::MetricReport evaluate_model(model::MattingModel<T>& model, const EvalSet& set) {
  std::vector<metrics::EvalSample> samples;
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    samples.push_back({set.ids[i], set.alphas[i], predict(model, set.images[i], set.trimaps[i]), set.trimaps[i]});
  }
  return metrics::evaluate(samples);
}

std::vector<AblationRow> ablate(const TrainConfig& cfg, std::ostream* log) {
  std::shared_ptr<const TrainingSource> source = open_source(cfg);
  const fs::path eval_dir = cfg.eval_dir.empty() ? cfg.data_dir : cfg.eval_dir;
  if (eval_dir.empty()) throw DataError("ablate needs eval_dir or data_dir");
  const EvalSet set = load_eval_set(eval_dir);
  std::vector<AblationRow> rows;
  for (const auto& v : kAblationVariants) {
    TrainConfig vc = apply_variant(cfg, v);
    std::string dir = v.name;
    for (auto& c : dir) {
      if (c == '+') c = '_';
    }
    vc.out_dir = cfg.out_dir / dir;
    if (log) *log << "== " << v.name << "\n";
    rows.push_back(vc.precision == Precision::kFloat64
                       ? ablate_variant<double>(vc, source, set, v.name, log)
                       : ablate_variant<float>(vc, source, set, v.name, log));
  }
  write_text(cfg.out_dir / "ablation.json", ablation_to_json(rows));
  write_text(cfg.out_dir / "ablation.txt", ablation_to_table(rows));
  return rows;
}

std::string ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j.push_back({{"variant", r.name},
                 {"sad", r.report.mean_sad},
                 {"mse", r.report.mean_mse},
                 {"grad", r.report.mean_grad},
                 {"conn", r.report.mean_conn},
                 {"count", r.report.samples.size()}});
  }
  return j.dump(2) + "\n";
}

std::string ablation_to_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %10s %10s %10s %10s\n", "variant", "SAD", "MSE", "Grad", "Conn");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-20s %10.4f %10.6f %10.4f %10.4f\n", r.name.c_str(), r.report.mean_sad,
                  r.report.mean_mse, r.report.mean_grad, r.report.mean_conn);
    os << line;
  }
  return os.str();
}

template imaging::AlphaMatte predict(model::MattingModel<float>&, const imaging::Image&, const trimap::Trimap&);
template imaging::AlphaMatte predict(model::MattingModel<double>&, const imaging::Image&, const trimap::Trimap&);
template metrics::MetricReport evaluate_model(model::MattingModel<float>&, const EvalSet&);
template metrics::MetricReport evaluate_model(model::MattingModel<double>&, const EvalSet&);

}  // namespace mf::pipeline
