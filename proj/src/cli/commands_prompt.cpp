// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "common.hpp"
#include "curio/errors.hpp"
#include "curio/prompt/assets.hpp"
#include "curio/prompt/chat.hpp"
#include "curio/prompt/llm_client.hpp"
#include "curio/prompt/parsers.hpp"
#include "curio/prompt/search.hpp"
#include "curio/prompt/taxonomy.hpp"
#include "curio/rng.hpp"

namespace curio::cli {

namespace {

using namespace curio::prompt;

constexpr std::uint64_t kItemStream = 1;
constexpr std::uint64_t kSelectStream = 2;

std::unique_ptr<LlmClient> make_client(const std::string& llm_cmd) {
  if (!llm_cmd.empty()) return std::make_unique<CommandLlmClient>(llm_cmd);
  return client_from_environment();
}

nlohmann::ordered_json rubrics_json(const RubricSet& set) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : set.rubrics) arr.push_back({r.name, r.check});
  return arr;
}

nlohmann::ordered_json format_error_json(const FormatError& e) {
  nlohmann::ordered_json j;
  j["valid"] = false;
  j["rule"] = std::string(rule_name(e.rule()));
  j["fragment"] = e.fragment();
  j["message"] = e.what();
  return j;
}

void register_gen_prompts(Registry& reg) {
  struct Args {
    std::string taxonomy, out = "-", report, llm_cmd, select = "random";
    std::size_t count = 1;
    std::optional<std::uint64_t> seed;
    bool dry_run = false, skip_rubrics = false;
    ModelDefaults models;
    RetryPolicy policy;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("gen-prompts", "Sample taxonomy items and generate prompts and rubrics with an LLM");
  reg.option(c, "--taxonomy", a->taxonomy, "Taxonomy file (JSON)");
  reg.option(c, "--count", a->count, "Number of items to sample (with replacement)");
  reg.option(c, "--seed", a->seed, "Seed of the item and selection streams");
  reg.option(c, "--out", a->out, "Records {item, category, subcategory, dims, prompt, rubrics} (JSONL); - for stdout");
  reg.option(c, "--report", a->report, "Counts of generated records and failures (JSON)");
  reg.flag(c, "--dry-run", a->dry_run, "Write the prompt-generation requests instead of sending them");
  reg.option(c, "--llm-cmd", a->llm_cmd,
             "Shell command answering one wire request on stdin (default: HTTP via LENS_LLM_ENDPOINT)");
  reg.option(c, "--select", a->select, "Which of the five returned prompts to keep: random or 1-5")
      ->check(CLI::IsMember({"random", "1", "2", "3", "4", "5"}));
  reg.flag(c, "--skip-rubrics", a->skip_rubrics, "Do not request rubrics for the kept prompts");
  reg.option(c, "--model", a->models.generator_model, "Model for prompt and rubric generation");
  reg.option(c, "--promptgen-temperature", a->models.promptgen_temperature, "Sampling temperature of prompt calls");
  reg.option(c, "--rubric-temperature", a->models.rubric_temperature, "Sampling temperature of rubric calls");
  reg.option(c, "--max-in-flight", a->policy.max_in_flight, "Maximum concurrent LLM requests");
  reg.option(c, "--attempts", a->policy.transport_attempts, "Tries per request on transient transport failures");
  c.run = [a, &ctx = reg.context()] {
    a->policy.validate();
    const auto seed = resolve_seed(ctx, a->seed);
    require_flag(a->taxonomy, "--taxonomy");
    const auto tax = load_taxonomy(a->taxonomy);
    if (tax.item_count() == 0) throw DataError("taxonomy has no items");

    auto items_rng = derive_stream(seed, 0, kItemStream);
    auto select_rng = derive_stream(seed, 0, kSelectStream);
    std::vector<ItemRequest> items;
    std::vector<std::size_t> picks;
    std::vector<ChatRequest> requests;
    for (std::size_t i = 0; i < a->count; ++i) {
      items.push_back(sample_item_request(tax, items_rng));
      const auto drawn = static_cast<std::size_t>(select_rng.below(kPromptKeys.size()));
      picks.push_back(a->select == "random" ? drawn : std::stoul(a->select) - 1);
      auto req = build_promptgen_request(items.back().item, items.back().dims, a->models);
      req.id = "promptgen-" + std::to_string(i);
      requests.push_back(std::move(req));
    }
    if (a->dry_run) {
      std::string text;
      for (const auto& r : requests) {
        nlohmann::ordered_json j;
        j["id"] = r.id;
        j["request"] = nlohmann::ordered_json::parse(request_to_json(r));
        text += j.dump() + "\n";
      }
      write_output(ctx, a->out, text);
      return 0;
    }

    auto client = make_client(a->llm_cmd);
    std::vector<std::optional<std::string>> prompts(items.size());
    std::size_t failures = 0;
    auto fail = [&](std::size_t i, const std::string& what) {
      ++failures;
      *ctx.err << "curio gen-prompts: item " << i << " (" << items[i].item << "): " << what << '\n';
    };
    const auto gen = run_requests(*client, requests, a->policy);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& res = gen.at(requests[i].id);
      if (!res.response) {
        fail(i, res.error);
        continue;
      }
      try {
        prompts[i] = parse_promptgen_response(*res.response)[picks[i]];
      } catch (const FormatError& e) {
        fail(i, e.what());
      }
    }

    std::vector<std::optional<RubricSet>> rubrics(items.size());
    if (!a->skip_rubrics) {
      std::vector<ChatRequest> rub_reqs;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!prompts[i]) continue;
        auto req = build_rubric_request(*prompts[i], a->models);
        req.id = "rubric-" + std::to_string(i);
        rub_reqs.push_back(std::move(req));
      }
      const auto rub = run_requests(*client, rub_reqs, a->policy);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!prompts[i]) continue;
        const auto& res = rub.at("rubric-" + std::to_string(i));
        if (!res.response) {
          fail(i, res.error);
          continue;
        }
        try {
          rubrics[i] = parse_rubrics(*res.response);
        } catch (const FormatError& e) {
          fail(i, e.what());
        }
      }
    }

    std::string text;
    std::size_t written = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!prompts[i] || (!a->skip_rubrics && !rubrics[i])) continue;
      nlohmann::ordered_json j;
      j["item"] = items[i].item;
      j["category"] = items[i].category;
      j["subcategory"] = items[i].subcategory;
      auto dims = nlohmann::ordered_json::array();
      for (auto d : items[i].dims) dims.push_back(std::string(dimension_name(d)));
      j["dims"] = dims;
      j["prompt"] = *prompts[i];
      j["rubrics"] = rubrics[i] ? rubrics_json(*rubrics[i]) : nlohmann::ordered_json::array();
      text += j.dump() + "\n";
      ++written;
    }
    write_output(ctx, a->out, text);
    if (!a->report.empty()) {
      nlohmann::ordered_json j;
      j["seed"] = seed;
      j["requested"] = items.size();
      j["written"] = written;
      j["failures"] = failures;
      stamp(j, ctx);
      write_output(ctx, a->report, j.dump(2) + "\n");
    }
    return failures == 0 ? 0 : 1;
  };
}

void register_rubric_validate(Registry& reg) {
  struct Args {
    std::string input = "-", kind = "rubrics", out = "-";
    RubricOptions options;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("rubric-validate", "Check a raw LLM response against its format contract");
  reg.option(c, "--input", a->input, "Raw response text; - for stdin");
  reg.option(c, "--kind", a->kind, "rubrics, prompts (five-key object) or verdict (1 or 0)")
      ->check(CLI::IsMember({"rubrics", "prompts", "verdict"}));
  reg.option(c, "--base-key", a->options.base_keys, "Canonical rubric name (repeatable; replaces the defaults)");
  reg.option(c, "--max-rubrics", a->options.max_generated, "Maximum generated rubrics");
  reg.option(c, "--out", a->out, "Verdict as JSON {valid, ...}; - for stdout");
  c.run = [a, &ctx = reg.context()] {
    ChatResponse r{read_input(a->input), "stop"};
    nlohmann::ordered_json j;
    try {
      if (a->kind == "rubrics") {
        const auto set = parse_rubrics(r, a->options);
        j["valid"] = true;
        j["generated"] = set.generated();
        j["rubrics"] = rubrics_json(set);
      } else if (a->kind == "prompts") {
        const auto p = parse_promptgen_response(r);
        j["valid"] = true;
        j["prompts"] = p;
      } else {
        j["valid"] = true;
        j["verdict"] = parse_verdict(r);
      }
    } catch (const FormatError& e) {
      write_output(ctx, a->out, format_error_json(e).dump(2) + "\n");
      *ctx.err << "curio rubric-validate: " << e.what() << '\n';
      return 1;
    }
    write_output(ctx, a->out, j.dump(2) + "\n");
    return 0;
  };
}

void register_prompt_search(Registry& reg) {
  struct Args {
    std::string initial, task, eval_cmd, llm_cmd, out = "-", report;
    std::size_t iterations = 5;
    ModelDefaults models;
  };
  auto a = std::make_shared<Args>();
  auto& c = reg.add("prompt-search", "Iteratively rewrite a system prompt, keeping a rewrite only if it scores higher");
  reg.option(c, "--initial", a->initial, "File holding the starting system prompt");
  reg.option(c, "--task", a->task,
             "Start from a stored prompt instead: general, geneval, oneig, longtext-cvtg, captioning, rl-promptgen, "
             "rubric, reward");
  reg.option(c, "--eval-cmd", a->eval_cmd,
             "Scores a prompt file ({prompt_file} placeholder or appended path); prints {score, failures}");
  reg.option(c, "--llm-cmd", a->llm_cmd,
             "Shell command answering rewrite requests (default: HTTP via LENS_LLM_ENDPOINT)");
  reg.option(c, "--iterations", a->iterations, "Rewrite rounds (>= 1)");
  reg.option(c, "--model", a->models.generator_model, "Model for rewrite calls");
  reg.option(c, "--temperature", a->models.promptgen_temperature, "Sampling temperature of rewrite calls");
  reg.option(c, "--out", a->out, "Best system prompt; - for stdout");
  reg.option(c, "--report", a->report, "Score history and per-iteration steps (JSON)");
  c.run = [a, &ctx = reg.context()] {
    if (a->iterations < 1) throw ConfigError("--iterations must be >= 1");
    if (a->initial.empty() == a->task.empty()) throw ConfigError("pass exactly one of --initial and --task");
    std::string initial;
    if (!a->task.empty()) {
      const auto t = parse_task(a->task);
      if (!t) throw ConfigError("unknown task \"" + a->task + "\"");
      initial = std::string(reasoner_prompt_for(*t));
    } else {
      initial = read_input(a->initial);
    }
    require_flag(a->eval_cmd, "--eval-cmd");
    const auto evaluate = command_evaluator(a->eval_cmd);
    auto client = make_client(a->llm_cmd);
    const auto models = a->models;
    const auto result = system_prompt_search(
        initial, evaluate, *client, a->iterations,
        [models](const std::string& p, const std::vector<std::string>& f) { return build_rewrite_request(p, f, models); });

    write_output(ctx, a->out, result.best_prompt);
    if (!a->report.empty()) {
      nlohmann::ordered_json j;
      j["iterations"] = a->iterations;
      j["best_score"] = result.best_score;
      j["history"] = result.history;
      auto steps = nlohmann::ordered_json::array();
      for (const auto& s : result.steps) {
        nlohmann::ordered_json e;
        e["iteration"] = s.iteration;
        e["score"] = s.score ? nlohmann::ordered_json(*s.score) : nullptr;
        e["accepted"] = s.accepted;
        if (!s.note.empty()) e["note"] = s.note;
        steps.push_back(e);
      }
      j["steps"] = steps;
      stamp(j, ctx);
      write_output(ctx, a->report, j.dump(2) + "\n");
    }
    return 0;
  };
}

}  // namespace

void register_prompt_commands(Registry& reg) {
  register_gen_prompts(reg);
  register_rubric_validate(reg);
  register_prompt_search(reg);
}

}  // namespace curio::cli
