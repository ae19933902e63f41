// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "common.hpp"
#include "curio/compute.hpp"
#include "curio/errors.hpp"
#include "curio/rl_math.hpp"
#include "curio/rng.hpp"
#include "curio/scheduler.hpp"
#include "curio/timesteps.hpp"

namespace curio::cli {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void register_schedule(Registry& reg) {
  struct Args {
    std::string input, out, report = "-", mode = "independent", tier = "auto";
    int world_size = 1;
    std::optional<std::uint64_t> seed;
    std::uint64_t epoch = 0;
    TierBatchSizes sizes;
    CostModel cost;
    std::size_t jobs = 1;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("schedule", "Partition a manifest across ranks and plan bucket-homogeneous batches");
  reg.option(c, "--input", a->input, "Manifest (JSONL)");
  reg.option(c, "--out", a->out, "Plan file (JSONL): header line then one batch per line");
  reg.option(c, "--report", a->report, "Imbalance report (JSON); - for stdout");
  reg.option(c, "--world-size", a->world_size, "Number of data-parallel ranks (>= 1)");
  reg.option(c, "--seed", a->seed, "Seed for partitioning and batch order");
  reg.option(c, "--epoch", a->epoch, "Epoch index mixed into every seeded stream");
  reg.option(c, "--mode", a->mode, "independent: ranks order batches on their own; synchronized: same tier per step")
      ->check(CLI::IsMember({"independent", "synchronized"}));
  reg.option(c, "--tier", a->tier, "auto (largest tier without upscaling) or a fixed 512, 768, 1024");
  reg.option(c, "--batch-512", a->sizes.sizes[0], "Batch size of the 512^2 tier");
  reg.option(c, "--batch-768", a->sizes.sizes[1], "Batch size of the 768^2 tier");
  reg.option(c, "--batch-1024", a->sizes.sizes[2], "Batch size of the 1024^2 tier");
  reg.option(c, "--cost-exponent", a->cost.exponent, "Step cost = batch * tokens^p + overhead; this is p (>= 1)");
  reg.option(c, "--step-overhead", a->cost.overhead, "Constant per-step cost");
  reg.option(c, "--jobs", a->jobs, "Worker threads; the plan does not depend on it");
  c.run = [a, &ctx = reg.context()] {
    RankLayout{0, a->world_size, 0, a->epoch}.validate();
    a->sizes.validate();
    a->cost.validate();
    TierPolicy policy;
    if (a->tier != "auto") {
      policy.fixed = parse_tier(a->tier);
      if (!policy.fixed) throw ConfigError("--tier must be auto, 512, 768 or 1024");
    }
    PlanOptions opts;
    opts.sizes = a->sizes;
    opts.mode = a->mode == "synchronized" ? SyncMode::Synchronized : SyncMode::Independent;
    opts.seed = resolve_seed(ctx, a->seed);
    opts.epoch = a->epoch;
    opts.jobs = a->jobs;
    require_flag(a->input, "--input");
    require_flag(a->out, "--out");

    const auto m = load_manifest(a->input);
    const auto part = partition(m, a->world_size, opts.seed, opts.epoch);
    std::vector<std::vector<LabeledId>> labeled;
    for (const auto& ids : part.ranks) labeled.push_back(label_ids(m, ids, policy));
    const auto plan = plan_epoch(labeled, opts);

    std::ostringstream text;
    write_plan(text, plan, opts, a->cost, policy);
    write_output(ctx, a->out, text.str());

    const auto imb = imbalance_report(plan, opts.sizes, a->cost);
    nlohmann::ordered_json j;
    j["seed"] = opts.seed;
    j["epoch"] = opts.epoch;
    j["world_size"] = a->world_size;
    j["partition_dropped"] = part.dropped.size();
    j["batch_dropped_per_rank"] = plan.dropped_per_rank;
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& r : plan.ranks) steps.push_back(r.size());
    j["steps_per_rank"] = steps;
    j["aligned_steps"] = imb.steps;
    j["max_ratio"] = imb.max_ratio;
    j["mean_ratio"] = imb.mean_ratio;
    j["step_ratios"] = imb.step_ratios;
    stamp(j, ctx);
    write_output(ctx, a->report, j.dump(2) + "\n");
    return 0;
  };
}

void register_sample_timesteps(Registry& reg) {
  struct Args {
    std::size_t count = 1000;
    std::optional<double> mu;
    std::optional<std::int64_t> tokens;
    double sigma = 1.0;
    std::optional<std::uint64_t> seed;
    MuSchedule schedule;
    bool no_clamp = false;
    std::string out = "-";
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("sample-timesteps", "Draw logit-normal flow-matching timesteps, one per line");
  reg.option(c, "--count", a->count, "Number of draws");
  reg.option(c, "--mu", a->mu, "Location of the logit-normal (overrides --tokens)");
  reg.option(c, "--tokens", a->tokens, "Image token count; mu follows the linear token schedule");
  reg.option(c, "--sigma", a->sigma, "Scale of the logit-normal");
  reg.option(c, "--seed", a->seed, "Seed of the draw stream");
  reg.option(c, "--n-lo", a->schedule.n_lo, "Token count at which mu equals --mu-lo");
  reg.option(c, "--mu-lo", a->schedule.mu_lo, "mu at --n-lo tokens");
  reg.option(c, "--n-hi", a->schedule.n_hi, "Token count at which mu equals --mu-hi");
  reg.option(c, "--mu-hi", a->schedule.mu_hi, "mu at --n-hi tokens");
  reg.flag(c, "--no-clamp", a->no_clamp, "Extrapolate mu outside [n-lo, n-hi] instead of clamping");
  reg.option(c, "--out", a->out, "Draws, one per line; - for stdout");
  c.run = [a, &ctx = reg.context()] {
    auto schedule = a->schedule;
    schedule.clamp_outside = !a->no_clamp;
    schedule.validate();
    LogitNormalParams p;
    p.sigma = a->sigma;
    if (a->mu) p.mu = *a->mu;
    else if (a->tokens) p.mu = mu_for_tokens(*a->tokens, schedule);
    else throw ConfigError("pass --mu or --tokens");
    p.validate();
    SplitMix64 rng(resolve_seed(ctx, a->seed));
    std::string text;
    for (double t : sample_ts(rng, p, a->count)) text += format_double(t) + "\n";
    write_output(ctx, a->out, text);
    return 0;
  };
}

struct NftTuple {
  std::string group;
  Eigen::VectorXd v_old, v_theta, v_target;
  double raw = 0.0;
};

Eigen::VectorXd read_vector(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_array()) throw ParseError(line, std::string("\"") + key + "\" must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j[key].size()));
  for (std::size_t i = 0; i < j[key].size(); ++i) {
    const auto& e = j[key][i];
    if (!e.is_number()) throw ParseError(line, std::string("\"") + key + "\" must hold numbers");
    v[static_cast<Eigen::Index>(i)] = e.get<double>();
  }
  if (!v.allFinite()) throw ParseError(line, std::string("\"") + key + "\" must be finite");
  return v;
}

std::vector<NftTuple> read_nft_tuples(const std::string& text) {
  std::vector<NftTuple> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(n, "not a JSON object");
    for (const auto& [k, v] : j.items())
      if (k != "group" && k != "v_old" && k != "v_theta" && k != "v_target" && k != "raw_reward")
        throw ParseError(n, "unknown key \"" + k + "\"");
    NftTuple t;
    if (j.contains("group")) {
      if (!j["group"].is_string()) throw ParseError(n, "\"group\" must be a string");
      t.group = j["group"].get<std::string>();
    }
    t.v_old = read_vector(j, "v_old", n);
    t.v_theta = read_vector(j, "v_theta", n);
    t.v_target = read_vector(j, "v_target", n);
    if (t.v_old.size() != t.v_theta.size() || t.v_old.size() != t.v_target.size())
      throw ParseError(n, "velocity vectors must have equal length");
    if (!j.contains("raw_reward") || !j["raw_reward"].is_number()) throw ParseError(n, "\"raw_reward\" must be a number");
    t.raw = j["raw_reward"].get<double>();
    if (!std::isfinite(t.raw)) throw ParseError(n, "\"raw_reward\" must be finite");
    out.push_back(std::move(t));
  }
  return out;
}

void register_nft_eval(Registry& reg) {
  struct Args {
    std::string input, out = "-", report, zc_mode = "global";
    NFTConfig cfg;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("nft-eval", "Normalize group rewards and evaluate the negative-aware fine-tuning loss");
  reg.option(c, "--input", a->input, "JSONL of {group?, v_old, v_theta, v_target, raw_reward}");
  reg.option(c, "--out", a->out, "Per-tuple rewards and losses (JSONL); - for stdout");
  reg.option(c, "--report", a->report, "Batch summary (JSON)");
  reg.option(c, "--beta", a->cfg.beta, "Velocity mixing coefficient");
  reg.option(c, "--kl-coeff", a->cfg.kl_coeff, "Weight of the policy-deviation penalty");
  reg.option(c, "--zc-mode", a->zc_mode, "global: std of all rewards; group: std within each group")
      ->check(CLI::IsMember({"global", "group"}));
  c.run = [a, &ctx = reg.context()] {
    a->cfg.validate();
    require_flag(a->input, "--input");
    const auto tuples = read_nft_tuples(read_input(a->input));

    // Groups in order of first appearance.
    std::vector<std::string> names;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      auto [it, fresh] = members.try_emplace(tuples[i].group);
      if (fresh) names.push_back(tuples[i].group);
      it->second.push_back(i);
    }
    RewardGroups groups;
    for (const auto& g : names) {
      Eigen::VectorXd raw(static_cast<Eigen::Index>(members[g].size()));
      for (std::size_t k = 0; k < members[g].size(); ++k) raw[static_cast<Eigen::Index>(k)] = tuples[members[g][k]].raw;
      groups.push_back(std::move(raw));
    }
    const auto mode = a->zc_mode == "group" ? ZcMode::GroupStd : ZcMode::GlobalStd;
    const auto normalized = normalize_groups(groups, mode);
    std::vector<double> reward(tuples.size());
    for (std::size_t gi = 0; gi < names.size(); ++gi)
      for (std::size_t k = 0; k < members[names[gi]].size(); ++k)
        reward[members[names[gi]][k]] = normalized[gi][static_cast<Eigen::Index>(k)];

    std::string text;
    double sum_nft = 0.0, sum_kl = 0.0;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      const auto& t = tuples[i];
      const double l = nft_loss(t.v_old, t.v_theta, t.v_target, reward[i], a->cfg.beta);
      const double kl = mean_squared_deviation(t.v_theta, t.v_old);
      sum_nft += l;
      sum_kl += kl;
      nlohmann::ordered_json j;
      j["line"] = i + 1;
      j["group"] = t.group;
      j["raw_reward"] = t.raw;
      j["reward"] = reward[i];
      j["nft_loss"] = l;
      j["kl"] = kl;
      j["total"] = l + a->cfg.kl_coeff * kl;
      text += j.dump() + "\n";
    }
    write_output(ctx, a->out, text);
    if (!a->report.empty()) {
      const double n = tuples.empty() ? 1.0 : static_cast<double>(tuples.size());
      nlohmann::ordered_json j;
      j["count"] = tuples.size();
      j["groups"] = names.size();
      j["zc_mode"] = a->zc_mode;
      if (mode == ZcMode::GlobalStd) j["z_c"] = global_reward_std(groups);
      j["beta"] = a->cfg.beta;
      j["kl_coeff"] = a->cfg.kl_coeff;
      j["mean_nft_loss"] = sum_nft / n;
      j["mean_kl"] = sum_kl / n;
      j["mean_total"] = (sum_nft + a->cfg.kl_coeff * sum_kl) / n;
      stamp(j, ctx);
      write_output(ctx, a->report, j.dump(2) + "\n");
    }
    return 0;
  };
}

void register_compute_compare(Registry& reg) {
  struct Args {
    std::string input, reference, format = "text", out = "-";
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("compute-compare", "Compare training budgets by GPU hours times peak TFLOPS");
  reg.option(c, "--input", a->input, "JSON {\"budgets\":[{label, gpu_hours, peak_tflops, precision?}]}");
  reg.option(c, "--reference", a->reference, "Label of the budget others are divided by (default: the first)");
  reg.option(c, "--format", a->format, "text or json")->check(CLI::IsMember({"text", "json"}));
  reg.option(c, "--out", a->out, "Ratio table; - for stdout");
  c.run = [a, &ctx = reg.context()] {
    require_flag(a->input, "--input");
    std::istringstream in(read_input(a->input));
    const auto budgets = parse_budgets(in);
    std::size_t ref = 0;
    if (!a->reference.empty()) {
      ref = budgets.size();
      for (std::size_t i = 0; i < budgets.size(); ++i)
        if (budgets[i].label == a->reference) ref = i;
      if (ref == budgets.size()) throw ConfigError("no budget labelled \"" + a->reference + "\"");
    }
    if (a->format == "json") {
      write_output(ctx, a->out, ratio_table_json(budgets, ref) + "\n");
      return 0;
    }
    std::string text;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %14s %12s %18s %10s %8s\n", "label", "gpu_hours", "peak_tflops",
                  "tflops_hours", "ratio", "percent");
    text += line;
    for (const auto& b : budgets) {
      const double r = compute_ratio(b, budgets[ref]);
      std::snprintf(line, sizeof line, "%-24s %14.1f %12.1f %18.1f %10.5f %8s\n", b.label.c_str(), b.gpu_hours,
                    b.peak_tflops, normalized_compute(b), r, format_percent(r).c_str());
      text += line;
    }
    text += std::string("reference: ") + budgets[ref].label + "\nnote: " + kComputeCaveat + "\n";
    write_output(ctx, a->out, text);
    return 0;
  };
}

}  // namespace

void register_train_commands(Registry& reg) {
  register_schedule(reg);
  register_sample_timesteps(reg);
  register_nft_eval(reg);
  register_compute_compare(reg);
}

}  // namespace curio::cli
