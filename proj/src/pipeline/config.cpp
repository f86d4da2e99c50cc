#include "matteforge/pipeline/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mf::pipeline {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Reads `key` into `out` when present, recording it as consumed.
template <typename U>
void read(const json& j, const char* key, U& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) out = j.at(key).get<U>();
}

void read_path(const json& j, const char* key, std::filesystem::path& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (j.contains(key)) out = j.at(key).get<std::string>();
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!seen.count(it.key())) throw DataError("unknown config key " + where + it.key());
  }
}

json section(const json& j, const char* key, std::set<std::string>& seen) {
  seen.insert(key);
  if (!j.contains(key)) return json::object();
  if (!j.at(key).is_object()) throw DataError(std::string("config section ") + key + " must be an object");
  return j.at(key);
}

}  // namespace

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object");
  TrainConfig c;
  try {
    std::set<std::string> seen;
    read(j, "total_steps", c.total_steps, seen);
    read(j, "warmup_steps", c.warmup_steps, seen);
    read(j, "batch_size", c.batch_size, seen);
    read(j, "base_lr", c.base_lr, seen);
    read(j, "min_lr", c.min_lr, seen);
    read(j, "seed", c.seed, seen);
    read(j, "checkpoint_every", c.checkpoint_every, seen);
    read(j, "imrp", c.imrp, seen);
    read(j, "deterministic", c.deterministic, seen);
    read(j, "workers", c.workers, seen);
    read_path(j, "data_dir", c.data_dir, seen);
    read_path(j, "fg_dir", c.fg_dir, seen);
    read_path(j, "alpha_dir", c.alpha_dir, seen);
    read_path(j, "bg_dir", c.bg_dir, seen);
    read_path(j, "eval_dir", c.eval_dir, seen);
    read_path(j, "out_dir", c.out_dir, seen);
    seen.insert("precision");
    if (j.contains("precision")) {
      const auto p = j.at("precision").get<std::string>();
      if (p == "float32") c.precision = Precision::kFloat32;
      else if (p == "float64") c.precision = Precision::kFloat64;
      else throw DataError("precision must be float32 or float64, got " + p);
    }

    std::set<std::string> s_loss;
    const json lj = section(j, "loss", seen);
    read(lj, "epsilon", c.loss.epsilon, s_loss);
    read(lj, "bg_threshold", c.loss.bg_threshold, s_loss);
    read(lj, "w_alpha", c.loss.w_alpha, s_loss);
    read(lj, "w_bg", c.loss.w_bg, s_loss);
    reject_unknown(lj, s_loss, "loss.");

    std::set<std::string> s_model;
    const json mj = section(j, "model", seen);
    read(mj, "base_width", c.model.base_width, s_model);
    read(mj, "encoder_blocks", c.model.encoder_blocks, s_model);
    read(mj, "tcp_width", c.model.tcp_width, s_model);
    read(mj, "tcp_enabled", c.model.tcp_enabled, s_model);
    read(mj, "zero_init_output", c.model.zero_init_output, s_model);
    s_model.insert("ffu_source");
    if (mj.contains("ffu_source")) {
      const auto f = mj.at("ffu_source").get<std::string>();
      if (f == "stem") c.model.ffu_source = model::FfuSource::kStem;
      else if (f == "stage1") c.model.ffu_source = model::FfuSource::kStage1;
      else throw DataError("model.ffu_source must be stem or stage1, got " + f);
    }
    reject_unknown(mj, s_model, "model.");

    std::set<std::string> s_tri;
    const json tj = section(j, "trimap", seen);
    read(tj, "base_kernel_min", c.trimap.base_kernel_min, s_tri);
    read(tj, "base_kernel_max", c.trimap.base_kernel_max, s_tri);
    read(tj, "steps_min", c.trimap.steps_min, s_tri);
    read(tj, "steps_max", c.trimap.steps_max, s_tri);
    read(tj, "iterations_min", c.trimap.iterations_min, s_tri);
    read(tj, "iterations_max", c.trimap.iterations_max, s_tri);
    read(tj, "dilate_kernel_min", c.trimap.dilate_kernel_min, s_tri);
    read(tj, "dilate_kernel_max", c.trimap.dilate_kernel_max, s_tri);
    read(tj, "erode_kernel_min", c.trimap.erode_kernel_min, s_tri);
    read(tj, "erode_kernel_max", c.trimap.erode_kernel_max, s_tri);
    read(tj, "seed", c.trimap.seed, s_tri);
    reject_unknown(tj, s_tri, "trimap.");

    std::set<std::string> s_crop;
    const json cj = section(j, "crop", seen);
    read(cj, "sizes", c.crop.sizes, s_crop);
    read(cj, "out", c.crop.out, s_crop);
    read(cj, "flip", c.crop.flip, s_crop);
    reject_unknown(cj, s_crop, "crop.");

    reject_unknown(j, seen, "");
  } catch (const json::exception& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  }
  if (c.warmup_steps < 0 || c.warmup_steps >= c.total_steps) {
    throw DataError("config needs 0 <= warmup_steps < total_steps");
  }
  if (c.batch_size < 1) throw DataError("batch_size must be >= 1");
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["total_steps"] = c.total_steps;
  j["warmup_steps"] = c.warmup_steps;
  j["batch_size"] = c.batch_size;
  j["base_lr"] = c.base_lr;
  j["min_lr"] = c.min_lr;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["imrp"] = c.imrp;
  j["deterministic"] = c.deterministic;
  j["workers"] = c.workers;
  j["precision"] = c.precision == Precision::kFloat32 ? "float32" : "float64";
  j["data_dir"] = c.data_dir.string();
  j["fg_dir"] = c.fg_dir.string();
  j["alpha_dir"] = c.alpha_dir.string();
  j["bg_dir"] = c.bg_dir.string();
  j["eval_dir"] = c.eval_dir.string();
  j["out_dir"] = c.out_dir.string();
  j["loss"] = {{"epsilon", c.loss.epsilon},
               {"bg_threshold", c.loss.bg_threshold},
               {"w_alpha", c.loss.w_alpha},
               {"w_bg", c.loss.w_bg}};
  j["model"] = {{"base_width", c.model.base_width},
                {"encoder_blocks", c.model.encoder_blocks},
                {"tcp_width", c.model.tcp_width},
                {"tcp_enabled", c.model.tcp_enabled},
                {"ffu_source", c.model.ffu_source == model::FfuSource::kStem ? "stem" : "stage1"},
                {"zero_init_output", c.model.zero_init_output}};
  j["trimap"] = {{"base_kernel_min", c.trimap.base_kernel_min},
                 {"base_kernel_max", c.trimap.base_kernel_max},
                 {"steps_min", c.trimap.steps_min},
                 {"steps_max", c.trimap.steps_max},
                 {"iterations_min", c.trimap.iterations_min},
                 {"iterations_max", c.trimap.iterations_max},
                 {"dilate_kernel_min", c.trimap.dilate_kernel_min},
                 {"dilate_kernel_max", c.trimap.dilate_kernel_max},
                 {"erode_kernel_min", c.trimap.erode_kernel_min},
                 {"erode_kernel_max", c.trimap.erode_kernel_max},
                 {"seed", c.trimap.seed}};
  j["crop"] = {{"sizes", c.crop.sizes}, {"out", c.crop.out}, {"flip", c.crop.flip}};
  return j.dump(2) + "\n";
}

TrainConfig apply_variant(TrainConfig cfg, const AblationVariant& v) {
  cfg.model.tcp_enabled = v.tcp_enabled;
  cfg.imrp = v.imrp;
  return cfg;
}

}  // namespace mf::pipeline
