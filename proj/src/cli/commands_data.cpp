// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <sstream>

#include "common.hpp"
#include "curio/buckets.hpp"
#include "curio/errors.hpp"
#include "curio/filter.hpp"
#include "curio/scheduler.hpp"

namespace curio::cli {

namespace {

// Options shared by `filter` and `dedup`.
struct DedupArgs {
  std::string embeddings;
  std::string mode = "exact";
  std::size_t ivf_lists = 0;
  std::size_t ivf_probes = IvfOptions{}.probes;
  int ivf_iterations = IvfOptions{}.kmeans_iterations;
  std::uint64_t ivf_seed = IvfOptions{}.seed;
  std::size_t shard_size = 0;

  void add(Registry& reg, Command& c, double& threshold) {
    reg.option(c, "--embeddings", embeddings, "Embedding store (LNSE) referenced by embedding_ref");
    reg.option(c, "--dup-threshold", threshold, "Remove a record whose cosine similarity to a kept one exceeds this");
    reg.option(c, "--dedup-mode", mode, "exact or approx (inverted-file index)")
        ->check(CLI::IsMember({"exact", "approx"}));
    reg.option(c, "--ivf-lists", ivf_lists, "Inverted lists for approx mode; 0 = round(sqrt(n))");
    reg.option(c, "--ivf-probes", ivf_probes, "Lists probed per query in approx mode");
    reg.option(c, "--ivf-iterations", ivf_iterations, "k-means iterations for the approx index");
    reg.option(c, "--ivf-seed", ivf_seed, "Seed of the approx index initialization");
    reg.option(c, "--dedup-shard-size", shard_size,
               "Deduplicate within consecutive shards of this many records; 0 = whole corpus");
  }

  void apply(FilterConfig& cfg) const {
    cfg.dedup_mode = mode == "approx" ? DedupMode::Approx : DedupMode::Exact;
    cfg.ivf.lists = ivf_lists;
    cfg.ivf.probes = ivf_probes;
    cfg.ivf.kmeans_iterations = ivf_iterations;
    cfg.ivf.seed = ivf_seed;
    cfg.dedup_shard_size = shard_size;
    if (cfg.ivf.kmeans_iterations < 1) throw ConfigError("--ivf-iterations must be >= 1");
  }
};

std::filesystem::path default_root(const std::string& manifest) {
  return std::filesystem::path(manifest).parent_path();
}

nlohmann::ordered_json filter_report(const FilterResult& r, const Context& ctx) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(report_to_json(r.report, -1));
  j["duplicates"] = nlohmann::ordered_json::object();
  for (const auto& [removed, kept] : r.duplicate_of) j["duplicates"][removed] = kept;
  stamp(j, ctx);
  return j;
}

std::string manifest_text(const Manifest& m) {
  std::ostringstream s;
  write_manifest(s, m);
  return s.str();
}

void register_filter(Registry& reg) {
  struct Args {
    std::string input, out, removed, report = "-", image_root;
    std::vector<std::string> disable;
    bool precomputed = true;
    FilterConfig cfg;
    DedupArgs dedup;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("filter", "Run the nine cleaning stages over a manifest");
  reg.option(c, "--input", a->input, "Input manifest (JSONL)");
  reg.option(c, "--out", a->out, "Kept records (JSONL)");
  reg.option(c, "--removed", a->removed, "Removed records with their stage scores (JSONL)");
  reg.option(c, "--report", a->report, "Per-stage counts (JSON); - for stdout");
  reg.option(c, "--image-root", a->image_root, "Directory relative image paths resolve against (default: manifest dir)");
  reg.option(c, "--disable", a->disable, "Stage to skip (repeatable): decode, area, nsfw, aesthetic, watermark, "
                                         "clarity, entropy, luminance, dedup");
  reg.option(c, "--use-precomputed-scores", a->precomputed,
             "Model stages read nsfw/aesthetic/watermark from record scores");
  reg.option(c, "--min-area", a->cfg.min_area, "Minimum width*height in pixels");
  reg.option(c, "--nsfw-max", a->cfg.nsfw_max, "Keep records whose nsfw score is at most this");
  reg.option(c, "--aesthetic-min", a->cfg.aesthetic_min, "Remove records whose aesthetic score is below this");
  reg.option(c, "--watermark-max", a->cfg.watermark_max, "Keep records whose watermark score is at most this");
  reg.option(c, "--clarity-min", a->cfg.clarity_min, "Minimum Laplacian variance after scale normalization");
  reg.option(c, "--entropy-min", a->cfg.entropy_min, "Minimum intensity entropy in bits");
  reg.option(c, "--luminance-min", a->cfg.luminance_min, "Minimum mean HSV value in [0,1]");
  reg.option(c, "--luminance-max", a->cfg.luminance_max, "Maximum mean HSV value in [0,1]");
  a->dedup.add(reg, c, a->cfg.dup_threshold);
  reg.option(c, "--jobs", a->cfg.jobs, "Worker threads; output does not depend on it");
  c.run = [a, &ctx = reg.context()] {
    auto cfg = a->cfg;
    cfg.use_precomputed_scores = a->precomputed;
    for (const auto& name : a->disable) {
      auto s = parse_stage(name);
      if (!s) throw ConfigError("unknown stage \"" + name + "\" in --disable");
      cfg.set_enabled(*s, false);
    }
    a->dedup.apply(cfg);
    cfg.validate();
    if (cfg.enabled(Stage::Dedup)) require_flag(a->dedup.embeddings, "--embeddings (or --disable dedup)");
    require_flag(a->input, "--input");
    require_flag(a->out, "--out");

    const auto m = load_manifest(a->input);
    std::optional<EmbeddingStore> store;
    if (cfg.enabled(Stage::Dedup)) store = read_embedding_store(a->dedup.embeddings);
    PipelineInputs inputs;
    inputs.embeddings = store ? &*store : nullptr;
    inputs.pixels = file_pixel_source(a->image_root.empty() ? default_root(a->input) : std::filesystem::path(a->image_root));
    const auto result = run_pipeline(m, cfg, inputs);

    write_output(ctx, a->out, manifest_text(result.kept));
    if (!a->removed.empty()) write_output(ctx, a->removed, manifest_text(result.removed));
    write_output(ctx, a->report, filter_report(result, ctx).dump(2) + "\n");
    return 0;
  };
}

void register_dedup(Registry& reg) {
  struct Args {
    std::string input, out, report = "-";
    double threshold = kDefaultDupThreshold;
    std::size_t jobs = 1;
    DedupArgs dedup;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("dedup", "Remove near-duplicate records by embedding cosine similarity (keep-first)");
  reg.option(c, "--input", a->input, "Input manifest (JSONL)");
  reg.option(c, "--out", a->out, "Kept records (JSONL)");
  reg.option(c, "--report", a->report, "Counts and removed-to-survivor map (JSON); - for stdout");
  a->dedup.add(reg, c, a->threshold);
  c.run = [a, &ctx = reg.context()] {
    FilterConfig cfg;
    cfg.disable_all();
    cfg.set_enabled(Stage::Dedup, true);
    cfg.dup_threshold = a->threshold;
    a->dedup.apply(cfg);
    cfg.validate();
    require_flag(a->dedup.embeddings, "--embeddings");
    require_flag(a->input, "--input");
    require_flag(a->out, "--out");
    const auto m = load_manifest(a->input);
    const auto store = read_embedding_store(a->dedup.embeddings);
    PipelineInputs inputs;
    inputs.embeddings = &store;
    const auto result = run_pipeline(m, cfg, inputs);
    write_output(ctx, a->out, manifest_text(result.kept));
    auto j = filter_report(result, ctx);
    nlohmann::ordered_json rep;
    rep["input"] = m.records.size();
    rep["kept"] = result.kept.records.size();
    rep["removed"] = result.removed.records.size();
    rep["duplicates"] = j["duplicates"];
    if (j.contains("generated_at")) rep["generated_at"] = j["generated_at"];
    write_output(ctx, a->report, rep.dump(2) + "\n");
    return 0;
  };
}

TierPolicy parse_tier_policy(const std::string& s) {
  if (s == "auto") return {};
  auto t = parse_tier(s);
  if (!t) throw ConfigError("--tier must be auto, 512, 768 or 1024");
  return {t};
}

void register_bucketize(Registry& reg) {
  struct Args {
    bool list = false;
    std::string export_path, input, out = "-", tier = "auto";
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("bucketize", "Show the bucket table or assign manifest records to buckets");
  reg.flag(c, "--list", a->list, "Print the 27 canonical buckets");
  reg.option(c, "--export", a->export_path, "Write the bucket table as JSON");
  reg.option(c, "--input", a->input, "Manifest whose records are assigned to buckets");
  reg.option(c, "--out", a->out, "Assignments (JSONL); - for stdout");
  reg.option(c, "--tier", a->tier, "auto (largest tier without upscaling) or a fixed 512, 768, 1024");
  c.run = [a, &ctx = reg.context()] {
    const auto policy = parse_tier_policy(a->tier);
    if (!a->list && a->export_path.empty() && a->input.empty())
      throw ConfigError("nothing to do: pass --list, --export or --input");
    const auto& table = canonical_table();
    if (a->list) {
      std::string text;
      char line[96];
      for (const auto& b : table) {
        std::snprintf(line, sizeof line, "%-5s %-5s %5d x %-5d %6lld tokens\n", std::string(tier_name(b.tier)).c_str(),
                      (std::to_string(b.aspect.w) + ":" + std::to_string(b.aspect.h)).c_str(), b.width, b.height,
                      static_cast<long long>(token_count(b)));
        text += line;
      }
      write_output(ctx, "-", text);
    }
    if (!a->export_path.empty()) write_output(ctx, a->export_path, table_to_json(table) + "\n");
    if (!a->input.empty()) {
      const auto m = load_manifest(a->input);
      std::string text;
      for (const auto& r : m.records) {
        const auto tier = select_tier(r.width, r.height, policy);
        const auto b = assign_bucket(r.width, r.height, tier);
        const auto plan = crop_plan(r.width, r.height, b);
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["bucket"] = {{"base", base_side(b.tier)},
                       {"aspect", std::to_string(b.aspect.w) + ":" + std::to_string(b.aspect.h)},
                       {"width", b.width},
                       {"height", b.height}};
        j["crop"] = {{"scale", plan.scale},         {"scaled_width", plan.scaled_width},
                     {"scaled_height", plan.scaled_height}, {"x", plan.crop.x},
                     {"y", plan.crop.y},            {"w", plan.crop.w},
                     {"h", plan.crop.h}};
        text += j.dump() + "\n";
      }
      write_output(ctx, a->out, text);
    }
    return 0;
  };
}

void register_stats(Registry& reg) {
  struct Args {
    std::string input, out = "-";
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("stats", "Record count, mean caption length in words and per-source counts");
  reg.option(c, "--input", a->input, "Manifest (JSONL)");
  reg.option(c, "--out", a->out, "Statistics (JSON); - for stdout");
  c.run = [a, &ctx = reg.context()] {
    require_flag(a->input, "--input");
    const auto s = manifest_stats(load_manifest(a->input));
    nlohmann::ordered_json j;
    j["count"] = s.count;
    j["mean_caption_words"] = s.mean_caption_words ? nlohmann::ordered_json(*s.mean_caption_words) : nullptr;
    j["per_source"] = nlohmann::ordered_json::object();
    for (auto src : kAllSources) j["per_source"][std::string(to_string(src))] = s.per_source.at(src);
    stamp(j, ctx);
    write_output(ctx, a->out, j.dump(2) + "\n");
    return 0;
  };
}

}  // namespace

void register_data_commands(Registry& reg) {
  register_filter(reg);
  register_dedup(reg);
  register_bucketize(reg);
  register_stats(reg);
}

}  // namespace curio::cli
