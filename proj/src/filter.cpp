// SPDX-License-Identifier: Apache-2.0
#include "curio/filter.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "curio/errors.hpp"
#include "curio/metrics.hpp"

namespace curio {

namespace {

constexpr std::array<std::string_view, 9> kStageNames{"decode",    "area",    "nsfw",      "aesthetic", "watermark",
                                                     "clarity",   "entropy", "luminance", "dedup"};

struct RecordOutcome {
  ImageRecord record;
  std::optional<Stage> removed_at;
};

bool finite_all(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

// Evaluates stages 1-8 for one record. Pure in (record, pixels, config, scorers).
RecordOutcome evaluate_record(const ImageRecord& in, const FilterConfig& cfg, const PipelineInputs& inputs) {
  RecordOutcome out{in, std::nullopt};
  auto& rec = out.record;
  std::optional<std::optional<RgbImage>> pixels;  // outer: attempted; inner: decoded
  auto image = [&]() -> const std::optional<RgbImage>& {
    if (!pixels) pixels = inputs.pixels ? inputs.pixels(rec) : std::nullopt;
    return *pixels;
  };

  for (auto stage : kStageOrder) {
    if (stage == Stage::Dedup) break;
    if (!cfg.enabled(stage)) continue;
    bool keep = true;
    switch (stage) {
      case Stage::Decode: {
        const auto& img = image();
        keep = img && img->width() == rec.width && img->height() == rec.height;
        break;
      }
      case Stage::Area: {
        rec.scores["area"] = static_cast<double>(rec.width) * static_cast<double>(rec.height);
        keep = area_keep(rec.width, rec.height, cfg.min_area);
        break;
      }
      case Stage::Nsfw:
      case Stage::Aesthetic:
      case Stage::Watermark: {
        const std::string key(stage_name(stage));
        double score;
        if (auto it = rec.scores.find(key); cfg.use_precomputed_scores && it != rec.scores.end()) {
          score = it->second;
        } else {
          const auto& img = image();
          if (!img) {
            keep = false;
            break;
          }
          const auto& scorer = inputs.scorers->at(stage);
          score = scorer.evaluate(*img);
          if (!std::isfinite(score) || score < scorer.range_min || score > scorer.range_max)
            throw ContractError("scorer \"" + scorer.name + "\" returned " + std::to_string(score) +
                                " outside its declared range");
          rec.scores[key] = score;
        }
        keep = stage == Stage::Nsfw        ? score <= cfg.nsfw_max
               : stage == Stage::Aesthetic ? !(score < cfg.aesthetic_min)
                                           : score <= cfg.watermark_max;
        break;
      }
      case Stage::Clarity: {
        const auto& img = image();
        if (!img) {
          keep = false;
          break;
        }
        try {
          double v = clarity_score(*img);
          rec.scores["clarity"] = v;
          keep = v >= cfg.clarity_min;
        } catch (const MetricError&) {
          keep = false;  // too thin to take a 3x3 Laplacian after normalization
        }
        break;
      }
      case Stage::Entropy: {
        const auto& img = image();
        if (!img) {
          keep = false;
          break;
        }
        double h = shannon_entropy(to_gray(*img));
        rec.scores["entropy"] = h;
        keep = h >= cfg.entropy_min;
        break;
      }
      case Stage::Luminance: {
        const auto& img = image();
        if (!img) {
          keep = false;
          break;
        }
        double v = mean_luminance(*img);
        rec.scores["luminance"] = v;
        keep = v >= cfg.luminance_min && v <= cfg.luminance_max;
        break;
      }
      case Stage::Dedup:
        break;
    }
    if (!keep) {
      out.removed_at = stage;
      return out;
    }
  }
  return out;
}

std::vector<RecordOutcome> evaluate_all(const Manifest& m, const FilterConfig& cfg, const PipelineInputs& inputs) {
  std::vector<RecordOutcome> outcomes(m.records.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, m.records.size()));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < m.records.size(); ++i) outcomes[i] = evaluate_record(m.records[i], cfg, inputs);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < m.records.size(); i = next++) {
          try {
            outcomes[i] = evaluate_record(m.records[i], cfg, inputs);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = m.records.size();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

}  // namespace

std::string_view stage_name(Stage s) noexcept { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view name) noexcept {
  for (auto s : kStageOrder)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

bool is_model_stage(Stage s) noexcept { return s == Stage::Nsfw || s == Stage::Aesthetic || s == Stage::Watermark; }

void FilterConfig::validate() const {
  if (!finite_all({min_area, nsfw_max, aesthetic_min, watermark_max, clarity_min, entropy_min, luminance_min,
                   luminance_max, dup_threshold}))
    throw ConfigError("all filter thresholds must be finite");
  if (dup_threshold < 0.0 || dup_threshold > 1.0) throw ConfigError("dup-threshold must lie in [0, 1]");
  if (luminance_min < 0.0 || luminance_max > 1.0 || luminance_min > luminance_max)
    throw ConfigError("luminance range must be a closed sub-interval of [0, 1]");
  if (min_area < 0.0) throw ConfigError("min-area must be nonnegative");
  if (dedup_mode == DedupMode::Approx && ivf.probes < 1) throw ConfigError("probes must be >= 1");
}

PixelSource file_pixel_source(std::filesystem::path root) {
  return [root = std::move(root)](const ImageRecord& r) -> std::optional<RgbImage> {
    std::filesystem::path p(r.path);
    if (p.is_relative() && !root.empty()) p = root / p;
    return decode_file(p);
  };
}

bool area_keep(std::int64_t width, std::int64_t height, double min_area) {
  if (width < 1 || height < 1) throw ContractError("area_keep: dimensions must be >= 1");
  return static_cast<double>(width) * static_cast<double>(height) >= min_area;
}

double clarity_score(const RgbImage& img) { return laplacian_variance(scale_normalize(to_gray(img), 512)); }

FilterResult run_pipeline(const Manifest& m, const FilterConfig& cfg, const PipelineInputs& inputs) {
  cfg.validate();
  for (auto stage : kStageOrder) {
    if (!cfg.enabled(stage) || !is_model_stage(stage)) continue;
    const bool have_scorer = inputs.scorers && inputs.scorers->contains(stage);
    if (have_scorer) continue;
    if (!cfg.use_precomputed_scores)
      throw ConfigError("no scorer supplied for enabled stage \"" + std::string(stage_name(stage)) + "\"");
    for (const auto& r : m.records)
      if (!r.scores.contains(std::string(stage_name(stage))))
        throw ConfigError("record \"" + r.id + "\" has no precomputed \"" + std::string(stage_name(stage)) +
                          "\" score and no scorer was supplied");
  }
  const bool dedup = cfg.enabled(Stage::Dedup);
  Eigen::MatrixXd all_embeddings;
  if (dedup) {
    if (!inputs.embeddings) throw ConfigError("duplicate stage enabled but no embedding store supplied");
    all_embeddings = gather_embeddings(m, *inputs.embeddings);
  }
  check_unique_ids(m);

  auto outcomes = evaluate_all(m, cfg, inputs);

  FilterResult result;
  result.kept.provenance = m.provenance;
  result.removed.provenance = m.provenance;
  std::array<std::size_t, 9> removed_per_stage{};
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].removed_at) {
      ++removed_per_stage[static_cast<std::size_t>(*outcomes[i].removed_at)];
    } else {
      survivors.push_back(i);
    }
  }

  std::vector<bool> dup_removed(outcomes.size(), false);
  if (dedup && !survivors.empty()) {
    const std::size_t shard = cfg.dedup_shard_size == 0 ? survivors.size() : cfg.dedup_shard_size;
    for (std::size_t begin = 0; begin < survivors.size(); begin += shard) {
      const std::size_t end = std::min(survivors.size(), begin + shard);
      Eigen::MatrixXd block(all_embeddings.rows(), static_cast<Eigen::Index>(end - begin));
      for (std::size_t k = begin; k < end; ++k)
        block.col(static_cast<Eigen::Index>(k - begin)) = all_embeddings.col(static_cast<Eigen::Index>(survivors[k]));
      const DupDecision d = cfg.dedup_mode == DedupMode::Exact ? dedup_exact(block, cfg.dup_threshold)
                                                               : dedup_approx(block, cfg.dup_threshold, cfg.ivf);
      for (const auto& [removed, kept] : d.survivor_map) {
        const auto ri = survivors[begin + removed], ki = survivors[begin + kept];
        dup_removed[ri] = true;
        auto& rec = outcomes[ri].record;
        rec.scores["dedup"] = cosine(all_embeddings.col(static_cast<Eigen::Index>(ri)),
                                     all_embeddings.col(static_cast<Eigen::Index>(ki)));
        outcomes[ri].removed_at = Stage::Dedup;
        result.duplicate_of.emplace(rec.id, outcomes[ki].record.id);
      }
    }
    removed_per_stage[static_cast<std::size_t>(Stage::Dedup)] =
        static_cast<std::size_t>(std::count(dup_removed.begin(), dup_removed.end(), true));
  }

  for (auto& o : outcomes) {
    if (o.removed_at) {
      result.removed_at.push_back(*o.removed_at);
      result.removed.records.push_back(std::move(o.record));
    } else {
      result.kept.records.push_back(std::move(o.record));
    }
  }

  std::size_t input = m.records.size();
  for (auto stage : kStageOrder) {
    StageCounts c;
    c.stage = stage;
    c.enabled = cfg.enabled(stage);
    c.input = input;
    c.removed = removed_per_stage[static_cast<std::size_t>(stage)];
    c.kept = input - c.removed;
    input = c.kept;
    result.report.stages.push_back(c);
  }
  return result;
}

std::string report_to_json(const FilterReport& report, int indent) {
  nlohmann::ordered_json j;
  j["stages"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.stages.size(); ++i) {
    const auto& s = report.stages[i];
    nlohmann::ordered_json e;
    e["stage"] = std::string(stage_name(s.stage));
    e["index"] = static_cast<int>(s.stage) + 1;
    e["enabled"] = s.enabled;
    e["input"] = s.input;
    e["removed"] = s.removed;
    e["kept"] = s.kept;
    j["stages"].push_back(std::move(e));
  }
  return j.dump(indent);
}

}  // namespace curio
