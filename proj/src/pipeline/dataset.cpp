#include "matteforge/pipeline/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "matteforge/error.hpp"
#include "matteforge/imaging/crop.hpp"
#include "matteforge/imaging/png_io.hpp"

namespace mf::pipeline {
namespace {

std::uint64_t seed_of(std::uint64_t seed, std::int64_t step, std::size_t item, Stream s) {
  return derive_seed(seed, {static_cast<std::uint64_t>(step), item, static_cast<std::uint64_t>(s)});
}

class MemorySource final : public TrainingSource {
 public:
  explicit MemorySource(std::vector<SourceItem> items) : items_(std::move(items)) {
    if (items_.empty()) throw DataError("training set is empty");
  }
  std::size_t size() const override { return items_.size(); }
  SourceItem get(std::size_t index, Rng&) const override { return items_.at(index); }

 private:
  std::vector<SourceItem> items_;
};

class RawSource final : public TrainingSource {
 public:
  RawSource(std::vector<std::string> ids, std::vector<imaging::Image> fgs,
            std::vector<imaging::AlphaMatte> alphas, std::vector<std::string> bg_ids,
            std::vector<imaging::Image> bgs)
      : ids_(std::move(ids)),
        fgs_(std::move(fgs)),
        alphas_(std::move(alphas)),
        bg_ids_(std::move(bg_ids)),
        bgs_(std::move(bgs)) {}
  std::size_t size() const override { return fgs_.size(); }
  SourceItem get(std::size_t index, Rng& rng) const override {
    const auto& fg = fgs_.at(index);
    const std::size_t b = std::uniform_int_distribution<std::size_t>(0, bgs_.size() - 1)(rng);
    const auto bg = imaging::fit_background(bgs_[b], fg.height, fg.width);
    return {ids_[index] + "+" + bg_ids_[b], imaging::composite(fg, bg, alphas_[index]), alphas_[index]};
  }

 private:
  std::vector<std::string> ids_;
  std::vector<imaging::Image> fgs_;
  std::vector<imaging::AlphaMatte> alphas_;
  std::vector<std::string> bg_ids_;
  std::vector<imaging::Image> bgs_;
};

struct RawPool {
  std::vector<std::string> ids;
  std::vector<fs::path> fg_files;
  std::vector<imaging::Image> fgs;
  std::vector<imaging::AlphaMatte> alphas;
  std::vector<fs::path> bg_files;
  std::vector<imaging::Image> bgs;
};

RawPool load_raw(const fs::path& fg_dir, const fs::path& alpha_dir, const fs::path& bg_dir) {
  RawPool pool;
  pool.fg_files = list_pngs(fg_dir);
  pool.bg_files = list_pngs(bg_dir);
  if (pool.fg_files.empty()) throw DataError("no foreground PNGs in " + fg_dir.string());
  if (pool.bg_files.empty()) throw DataError("no background PNGs in " + bg_dir.string());
  for (const auto& f : pool.fg_files) {
    const fs::path a = alpha_dir / f.filename();
    if (!fs::exists(a)) throw DataError("missing alpha for " + f.filename().string() + " in " + alpha_dir.string());
    auto fg = imaging::load_image(f);
    auto alpha = imaging::load_alpha(a);
    if (!alpha.same_size(fg.height, fg.width)) {
      throw DataError("alpha size differs from foreground for " + f.filename().string());
    }
    pool.ids.push_back(f.stem().string());
    pool.fgs.push_back(std::move(fg));
    pool.alphas.push_back(std::move(alpha));
  }
  for (const auto& b : pool.bg_files) pool.bgs.push_back(imaging::load_image(b));
  return pool;
}

}  // namespace

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::unique_ptr<TrainingSource> make_memory_source(std::vector<SourceItem> items) {
  return std::make_unique<MemorySource>(std::move(items));
}

std::unique_ptr<TrainingSource> open_raw_source(const fs::path& fg_dir, const fs::path& alpha_dir,
                                                const fs::path& bg_dir) {
  auto pool = load_raw(fg_dir, alpha_dir, bg_dir);
  std::vector<std::string> bg_ids;
  for (const auto& b : pool.bg_files) bg_ids.push_back(b.stem().string());
  return std::make_unique<RawSource>(std::move(pool.ids), std::move(pool.fgs), std::move(pool.alphas),
                                     std::move(bg_ids), std::move(pool.bgs));
}

std::unique_ptr<TrainingSource> open_synth_source(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  if (!is) throw DataError("missing manifest.json in " + dir.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad manifest: ") + e.what());
  }
  std::vector<SourceItem> items;
  try {
    for (const auto& s : j.at("samples")) {
      SourceItem it;
      it.id = s.at("id").get<std::string>();
      it.image = imaging::load_image(dir / s.at("comp").get<std::string>());
      it.alpha = imaging::load_alpha(dir / s.at("alpha").get<std::string>());
      if (!it.alpha.same_size(it.image.height, it.image.width)) {
        throw DataError("alpha size differs from composite for " + it.id);
      }
      items.push_back(std::move(it));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad manifest: ") + e.what());
  }
  return make_memory_source(std::move(items));
}

std::unique_ptr<TrainingSource> open_source(const TrainConfig& cfg) {
  if (!cfg.data_dir.empty()) return open_synth_source(cfg.data_dir);
  if (cfg.fg_dir.empty() || cfg.alpha_dir.empty() || cfg.bg_dir.empty()) {
    throw DataError("config needs data_dir or all of fg_dir, alpha_dir, bg_dir");
  }
  return open_raw_source(cfg.fg_dir, cfg.alpha_dir, cfg.bg_dir);
}

std::size_t sample_index(std::uint64_t seed, std::size_t pool, std::size_t batch, std::int64_t step,
                         std::size_t item) {
  const std::uint64_t pos = static_cast<std::uint64_t>(step) * batch + item;
  const std::uint64_t epoch = pos / pool;
  std::vector<std::size_t> perm(pool);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {epoch, static_cast<std::uint64_t>(Stream::kOrder)}));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm[pos % pool];
}

Batch assemble_batch(const TrainConfig& cfg, const TrainingSource& source, std::int64_t step) {
  Batch batch;
  batch.step = step;
  for (std::size_t b = 0; b < cfg.batch_size; ++b) {
    const std::size_t idx = sample_index(cfg.seed, source.size(), cfg.batch_size, step, b);
    Rng src_rng(seed_of(cfg.seed, step, b, Stream::kSource));
    Rng crop_rng(seed_of(cfg.seed, step, b, Stream::kCrop));
    Rng sp_rng(seed_of(cfg.seed, step, b, Stream::kSpTrimap));
    Rng tcp_rng(seed_of(cfg.seed, step, b, Stream::kTcpTrimap));

    SourceItem src = source.get(idx, src_rng);
    const auto full = trimap::trimap_from_alpha(src.alpha);
    auto crop = imaging::crop_for_training(src.image, src.alpha, full, cfg.crop, crop_rng);
    TrainingItem item;
    item.id = src.id;
    item.trimaps.sp = trimap::gen_sp_trimap(crop.alpha, cfg.trimap, sp_rng);
    item.trimaps.tcp = cfg.imrp ? trimap::perturb_for_tcp(item.trimaps.sp, cfg.trimap, tcp_rng)
                                : item.trimaps.sp;
    item.image = std::move(crop.image);
    item.alpha = std::move(crop.alpha);
    batch.items.push_back(std::move(item));
  }
  return batch;
}

std::uint64_t trimap_hash(const trimap::Trimap& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto l : t.labels) {
    h ^= static_cast<std::uint8_t>(l);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t synthesize_dataset(const SynthOptions& opts) {
  auto pool = load_raw(opts.fg_dir, opts.alpha_dir, opts.bg_dir);
  const auto samples = imaging::synthesize_set(pool.fgs, pool.alphas, pool.bgs, opts.per_fg, opts.seed);

  for (const char* sub : {"comp", "alpha", "trimap_sp", "trimap_tcp"}) fs::create_directories(opts.out_dir / sub);

  nlohmann::ordered_json manifest;
  manifest["seed"] = opts.seed;
  manifest["per_fg"] = opts.per_fg;
  auto rows = nlohmann::ordered_json::array();
  std::vector<std::size_t> per_fg_count(pool.fgs.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::ostringstream id;
    id << pool.ids[s.fg_id] << "_" << per_fg_count[s.fg_id]++;
    const std::string name = id.str() + ".png";

    Rng sp_rng(derive_seed(opts.seed, {i, static_cast<std::uint64_t>(Stream::kSpTrimap)}));
    Rng tcp_rng(derive_seed(opts.seed, {i, static_cast<std::uint64_t>(Stream::kTcpTrimap)}));
    const auto sp = trimap::gen_sp_trimap(s.alpha, opts.trimap, sp_rng);
    const auto tcp = trimap::perturb_for_tcp(sp, opts.trimap, tcp_rng);

    imaging::save_png(opts.out_dir / "comp" / name, s.composite);
    imaging::save_png(opts.out_dir / "alpha" / name, s.alpha);
    imaging::save_gray8(opts.out_dir / "trimap_sp" / name, trimap::to_gray8(sp));
    imaging::save_gray8(opts.out_dir / "trimap_tcp" / name, trimap::to_gray8(tcp));

    nlohmann::ordered_json row;
    row["id"] = id.str();
    row["fg"] = pool.fg_files[s.fg_id].filename().string();
    row["bg"] = pool.bg_files[s.bg_id].filename().string();
    row["comp"] = "comp/" + name;
    row["alpha"] = "alpha/" + name;
    row["trimap_sp"] = "trimap_sp/" + name;
    row["trimap_tcp"] = "trimap_tcp/" + name;
    rows.push_back(row);
  }
  manifest["samples"] = rows;
  std::ofstream os(opts.out_dir / "manifest.json");
  os << manifest.dump(2) << "\n";
  if (!os) throw DataError("cannot write manifest in " + opts.out_dir.string());
  return samples.size();
}

}  // namespace mf::pipeline
