// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curio/dedup.hpp"
#include "curio/embedding_store.hpp"
#include "curio/image.hpp"
#include "curio/manifest.hpp"

namespace curio {

/// The nine cleaning stages, applied in this order.
enum class Stage : std::uint8_t { Decode, Area, Nsfw, Aesthetic, Watermark, Clarity, Entropy, Luminance, Dedup };

inline constexpr std::array<Stage, 9> kStageOrder{Stage::Decode,    Stage::Area,    Stage::Nsfw,
                                                 Stage::Aesthetic, Stage::Watermark, Stage::Clarity,
                                                 Stage::Entropy,   Stage::Luminance, Stage::Dedup};

std::string_view stage_name(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view name) noexcept;
/// NSFW, aesthetic and watermark stages are backed by external scorers.
bool is_model_stage(Stage s) noexcept;

enum class DedupMode { Exact, Approx };

struct FilterConfig {
  double min_area = 384.0 * 384.0;
  double nsfw_max = 0.5;
  double aesthetic_min = 3.0;
  double watermark_max = 0.5;
  double clarity_min = 100.0;
  double entropy_min = 4.0;
  double luminance_min = 0.05;
  double luminance_max = 0.98;
  double dup_threshold = kDefaultDupThreshold;
  std::array<bool, 9> stage_enabled{true, true, true, true, true, true, true, true, true};
  /// Model stages read record.scores[stage] when present instead of invoking a scorer.
  bool use_precomputed_scores = false;
  DedupMode dedup_mode = DedupMode::Exact;
  IvfOptions ivf;
  /// Records are deduplicated within consecutive shards of this many survivors; 0 = whole corpus.
  std::size_t dedup_shard_size = 0;
  /// Worker threads for the per-record stages; output is identical for every value.
  std::size_t jobs = 1;

  bool enabled(Stage s) const noexcept { return stage_enabled[static_cast<std::size_t>(s)]; }
  void set_enabled(Stage s, bool on) noexcept { stage_enabled[static_cast<std::size_t>(s)] = on; }
  void disable_all() noexcept { stage_enabled.fill(false); }
  /// Throws ConfigError if any threshold is non-finite or out of its domain.
  void validate() const;
};

/// External model scorer. `evaluate` must be deterministic and safe to call concurrently.
struct ScorerContract {
  std::string name;
  double range_min = 0.0;
  double range_max = 1.0;
  std::function<double(const RgbImage&)> evaluate;
};

using ScorerSet = std::map<Stage, ScorerContract>;

/// Loads a record's pixels; nullopt means unreadable or corrupted.
using PixelSource = std::function<std::optional<RgbImage>(const ImageRecord&)>;

/// Reads record.path (relative paths resolve against `root`) and decodes it.
PixelSource file_pixel_source(std::filesystem::path root = {});

struct StageCounts {
  Stage stage = Stage::Decode;
  bool enabled = false;
  std::size_t input = 0;
  std::size_t removed = 0;
  std::size_t kept = 0;
  bool operator==(const StageCounts&) const = default;
};

struct FilterReport {
  std::vector<StageCounts> stages;  // all nine, in stage order
  bool operator==(const FilterReport&) const = default;
};

struct FilterResult {
  Manifest kept;
  /// Removed records with whatever stage scores were computed before removal.
  Manifest removed;
  std::vector<Stage> removed_at;  // parallel to removed.records
  FilterReport report;
  /// Removed id -> kept id for the duplicate stage.
  std::map<std::string, std::string> duplicate_of;
};

bool area_keep(std::int64_t width, std::int64_t height, double min_area);

/// Scale-normalized (longer side 512) Laplacian variance of the BT.601 luma.
double clarity_score(const RgbImage& img);

struct PipelineInputs {
  const ScorerSet* scorers = nullptr;
  const EmbeddingStore* embeddings = nullptr;
  PixelSource pixels;
};

/// Runs the enabled stages in order. Configuration problems (missing scorer,
/// missing embeddings, bad thresholds) raise ConfigError before any record is read.
FilterResult run_pipeline(const Manifest& m, const FilterConfig& cfg, const PipelineInputs& inputs);

/// Structured report: {"stages":[{"stage","index","enabled","input","removed","kept"}...]}.
std::string report_to_json(const FilterReport& report, int indent = 2);

}  // namespace curio
