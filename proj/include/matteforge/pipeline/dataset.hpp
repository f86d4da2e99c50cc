#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "matteforge/imaging/composite.hpp"
#include "matteforge/pipeline/config.hpp"
#include "matteforge/rng.hpp"
#include "matteforge/trimap/trimap.hpp"

namespace mf::pipeline {

namespace fs = std::filesystem;

/// PNG files of a directory, sorted by name.
std::vector<fs::path> list_pngs(const fs::path& dir);

struct SourceItem {
  std::string id;
  imaging::Image image;
  imaging::AlphaMatte alpha;
};

/// A pool of composited training images. `get` may consume `rng` (raw
/// sources draw a background per call).
class TrainingSource {
 public:
  virtual ~TrainingSource() = default;
  virtual std::size_t size() const = 0;
  virtual SourceItem get(std::size_t index, Rng& rng) const = 0;
};

/// Reads a synthesized dataset directory (manifest.json + comp/ + alpha/).
std::unique_ptr<TrainingSource> open_synth_source(const fs::path& dir);

/// Composes raw foregrounds over a background drawn per call.
std::unique_ptr<TrainingSource> open_raw_source(const fs::path& fg_dir, const fs::path& alpha_dir,
                                                const fs::path& bg_dir);

/// Picks the synthesized set when data_dir is set, else the raw dirs.
std::unique_ptr<TrainingSource> open_source(const TrainConfig& cfg);

/// In-memory source, used by tests and the ablation harness.
std::unique_ptr<TrainingSource> make_memory_source(std::vector<SourceItem> items);

struct TrainingItem {
  std::string id;
  imaging::Image image;
  imaging::AlphaMatte alpha;
  trimap::TrimapPair trimaps;
};

struct Batch {
  std::int64_t step = 0;
  std::vector<TrainingItem> items;
};

// RNG stream purposes for derive_seed(seed, {step, item, purpose}).
enum class Stream : std::uint64_t { kOrder = 0, kSource = 1, kCrop = 2, kSpTrimap = 3, kTcpTrimap = 4 };

/// Source index of batch slot `item` at `step`: epochs walk a fresh
/// seeded permutation of the pool.
std::size_t sample_index(std::uint64_t seed, std::size_t pool, std::size_t batch, std::int64_t step,
                         std::size_t item);

/// Pure function of (cfg, source, step). The TCP trimap is perturbed only
/// when cfg.imrp is set, from its own stream, so toggling IMRP leaves data
/// order, crops and SP trimaps unchanged.
Batch assemble_batch(const TrainConfig& cfg, const TrainingSource& source, std::int64_t step);

/// FNV-1a over trimap labels, for logging data order.
std::uint64_t trimap_hash(const trimap::Trimap& t);

struct SynthOptions {
  fs::path fg_dir;
  fs::path alpha_dir;
  fs::path bg_dir;
  fs::path out_dir;
  std::size_t per_fg = 4;
  std::uint64_t seed = 0;
  trimap::TrimapGenConfig trimap;
};

/// Writes comp/, alpha/, trimap_sp/, trimap_tcp/ and manifest.json; returns
/// the number of samples. Identical inputs and seed give identical files.
std::size_t synthesize_dataset(const SynthOptions& opts);

}  // namespace mf::pipeline
