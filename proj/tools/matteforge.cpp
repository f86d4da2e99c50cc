#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "matteforge/engine/parallel.hpp"
#include "matteforge/error.hpp"
#include "matteforge/pipeline/commands.hpp"
#include "matteforge/pipeline/dataset.hpp"

namespace fs = std::filesystem;
using namespace mf::pipeline;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "Base random seed");
  cmd->add_flag("--deterministic", f.deterministic, "Reproducible run: no prefetch, fixed reductions");
}

TrainConfig resolve(const CommonFlags& f) {
  TrainConfig cfg = f.config.empty() ? TrainConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.deterministic) cfg.deterministic = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matteforge: trimap-based image matting toolkit"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string data_dir, out_dir, eval_dir, resume, fg_dir, alpha_dir, bg_dir;
  std::optional<std::int64_t> steps;

  SynthOptions synth;
  std::string synth_fg, synth_alpha, synth_bg, synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Composite foregrounds over backgrounds into a training set");
  add_common(synth_cmd, common);
  synth_cmd->add_option("--fg-dir", synth_fg, "Foreground PNGs")->required();
  synth_cmd->add_option("--alpha-dir", synth_alpha, "Alpha PNGs named like the foregrounds")->required();
  synth_cmd->add_option("--bg-dir", synth_bg, "Background PNGs")->required();
  synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
  synth_cmd->add_option("--per-fg", synth.per_fg, "Backgrounds per foreground")->check(CLI::PositiveNumber);

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, common);
  train_cmd->add_option("--data-dir", data_dir, "Synthesized dataset directory (fixed composites)");
  train_cmd->add_option("--fg-dir", fg_dir, "Raw foregrounds, composed on the fly");
  train_cmd->add_option("--alpha-dir", alpha_dir, "Raw alphas named like the foregrounds");
  train_cmd->add_option("--bg-dir", bg_dir, "Raw backgrounds");
  train_cmd->add_option("--out-dir", out_dir, "Run directory for checkpoints and logs");
  train_cmd->add_option("--steps", steps, "Total optimization steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--resume", resume, "Checkpoint to resume from");

  InferOptions infer_opts;
  std::string inf_ckpt, inf_image, inf_trimap, inf_out, inf_image_dir, inf_trimap_dir, inf_out_dir;
  auto* infer_cmd = app.add_subcommand("infer", "Predict alpha mattes");
  infer_cmd->add_option("--checkpoint", inf_ckpt, "Model checkpoint")->required();
  infer_cmd->add_option("--image", inf_image, "Input image");
  infer_cmd->add_option("--trimap", inf_trimap, "Trimap PNG (0 / 128 / 255)");
  infer_cmd->add_option("--out", inf_out, "Output matte PNG");
  infer_cmd->add_option("--image-dir", inf_image_dir, "Directory of input images");
  infer_cmd->add_option("--trimap-dir", inf_trimap_dir, "Directory of trimaps named like the images");
  infer_cmd->add_option("--out-dir", inf_out_dir, "Directory for output mattes");

  EvalOptions eval_opts;
  std::string ev_pred, ev_gt, ev_trimap, ev_out;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted mattes against ground truth");
  eval_cmd->add_option("--pred-dir", ev_pred, "Predicted mattes")->required();
  eval_cmd->add_option("--gt-dir", ev_gt, "Ground-truth mattes")->required();
  eval_cmd->add_option("--trimap-dir", ev_trimap, "Evaluation trimaps")->required();
  eval_cmd->add_option("--out", ev_out, "Report JSON path (table written alongside as .txt)")
      ->default_val("report.json");

  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the three ablation variants");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--data-dir", data_dir, "Synthesized training set");
  ablate_cmd->add_option("--eval-dir", eval_dir, "Synthesized evaluation set (defaults to the training set)");
  ablate_cmd->add_option("--out-dir", out_dir, "Output directory");
  ablate_cmd->add_option("--steps", steps, "Total optimization steps per variant")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  mf::parallel::max_threads();  // applies MATTEFORGE_THREADS

  try {
    if (*synth_cmd) {
      const TrainConfig cfg = resolve(common);
      synth.fg_dir = synth_fg;
      synth.alpha_dir = synth_alpha;
      synth.bg_dir = synth_bg;
      synth.out_dir = synth_out;
      synth.seed = cfg.seed;
      synth.trimap = cfg.trimap;
      const auto n = synthesize_dataset(synth);
      std::cout << "wrote " << n << " samples to " << synth_out << "\n";
    } else if (*train_cmd || *ablate_cmd) {
      TrainConfig cfg = resolve(common);
      if (!data_dir.empty()) cfg.data_dir = data_dir;
      if (!fg_dir.empty()) cfg.fg_dir = fg_dir;
      if (!alpha_dir.empty()) cfg.alpha_dir = alpha_dir;
      if (!bg_dir.empty()) cfg.bg_dir = bg_dir;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (!eval_dir.empty()) cfg.eval_dir = eval_dir;
      if (steps) {
        cfg.total_steps = *steps;
        if (cfg.warmup_steps >= cfg.total_steps) cfg.warmup_steps = cfg.total_steps / 10;
      }
      if (*train_cmd) {
        const auto outcome =
            train(cfg, &std::cout, resume.empty() ? std::nullopt : std::optional<fs::path>(resume));
        std::cout << "checkpoint " << outcome.checkpoint.string() << "\n";
      } else {
        const auto rows = ablate(cfg, &std::cout);
        std::cout << ablation_to_table(rows);
      }
    } else if (*infer_cmd) {
      infer_opts.checkpoint = inf_ckpt;
      infer_opts.image = inf_image;
      infer_opts.trimap = inf_trimap;
      infer_opts.out = inf_out;
      infer_opts.image_dir = inf_image_dir;
      infer_opts.trimap_dir = inf_trimap_dir;
      infer_opts.out_dir = inf_out_dir;
      const auto n = infer(infer_opts);
      std::cout << "wrote " << n << " mattes\n";
    } else if (*eval_cmd) {
      eval_opts.pred_dir = ev_pred;
      eval_opts.gt_dir = ev_gt;
      eval_opts.trimap_dir = ev_trimap;
      eval_opts.out = ev_out;
      const auto outcome = eval(eval_opts);
      std::cout << mf::metrics::report_to_table(outcome.report);
      if (!outcome.missing.empty()) {
        for (const auto& m : outcome.missing) std::cerr << "error: no prediction or trimap for " << m << "\n";
        return kExitData;
      }
    }
  } catch (const mf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mf::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const mf::DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const mf::EmptyRegionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
