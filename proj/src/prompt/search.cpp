// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/search.hpp"

#include <cmath>

#include <json.hpp>

#include "shell.hpp"

namespace curio::prompt {

namespace {

constexpr std::string_view kRewriteInstruction =
    "You improve system prompts for a text-to-image prompt rewriter. You receive the current system prompt "
    "and an analysis of images that failed under it. Return only the complete revised system prompt, with "
    "no commentary. Keep every guideline that still helps and add or sharpen guidelines that address the "
    "failures.";

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ChatRequest build_rewrite_request(const std::string& system_prompt, const std::vector<std::string>& failures,
                                  const ModelDefaults& models) {
  ChatRequest r;
  r.model = models.generator_model;
  r.temperature = models.promptgen_temperature;
  r.messages.push_back({"system", std::string(kRewriteInstruction)});
  std::string user = "Current system prompt:\n" + system_prompt + "\n\nFailure analysis:\n";
  if (failures.empty()) user += "(none reported)\n";
  for (const auto& f : failures) user += "- " + f + "\n";
  r.messages.push_back({"user", std::move(user)});
  return r;
}

SearchResult system_prompt_search(const std::string& initial, const Evaluator& evaluate, LlmClient& rewriter,
                                  std::size_t iterations, const RewriteBuilder& build) {
  if (iterations < 1) throw ContractError("system_prompt_search: iterations must be >= 1");
  if (!evaluate) throw ContractError("system_prompt_search: evaluator required");
  const RewriteBuilder builder =
      build ? build : [](const std::string& p, const std::vector<std::string>& f) { return build_rewrite_request(p, f); };

  SearchResult res;
  auto best = evaluate(initial);
  res.best_prompt = initial;
  res.best_score = best.score;
  res.history.push_back(best.score);

  for (std::size_t it = 1; it <= iterations; ++it) {
    SearchStep step;
    step.iteration = it;
    try {
      auto req = builder(res.best_prompt, best.failures);
      req.id = "rewrite-" + std::to_string(it);
      const auto candidate = trim_copy(rewriter.complete(req).content);
      if (candidate.empty()) throw DataError("rewriter returned an empty prompt");
      step.candidate = candidate;
      auto eval = evaluate(candidate);
      step.score = eval.score;
      if (eval.score > res.best_score) {
        step.accepted = true;
        res.best_prompt = candidate;
        res.best_score = eval.score;
        best = std::move(eval);
      }
    } catch (const Error& e) {
      step.note = std::string("skipped: ") + e.what();
    }
    res.history.push_back(res.best_score);
    res.steps.push_back(std::move(step));
  }
  return res;
}

Evaluator command_evaluator(std::string command) {
  if (command.empty()) throw ConfigError("evaluator command must be nonempty");
  return [command](const std::string& system_prompt) {
    detail::TempFile file(".txt");
    if (!file.write(system_prompt)) throw DataError("cannot write " + file.path().string());
    const std::string quoted = detail::shell_quote(file.path().string());
    std::string cmd = command;
    constexpr std::string_view kPlaceholder = "{prompt_file}";
    if (cmd.find(kPlaceholder) == std::string::npos) {
      cmd += " " + quoted;
    } else {
      for (auto pos = cmd.find(kPlaceholder); pos != std::string::npos; pos = cmd.find(kPlaceholder, pos + quoted.size()))
        cmd.replace(pos, kPlaceholder.size(), quoted);
    }
    const auto r = detail::run_shell(cmd);
    if (!r.started) throw DataError("cannot start evaluator command");
    if (r.status != 0) throw DataError("evaluator exited with status " + std::to_string(r.status));
    const auto j = nlohmann::json::parse(r.stdout_text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("score") || !j["score"].is_number())
      throw DataError("evaluator output must be {\"score\": number, \"failures\": [...]}");
    Evaluation e;
    e.score = j["score"].get<double>();
    if (!std::isfinite(e.score)) throw DataError("evaluator score must be finite");
    if (j.contains("failures")) {
      if (!j["failures"].is_array()) throw DataError("evaluator \"failures\" must be an array");
      for (const auto& f : j["failures"]) {
        if (!f.is_string()) throw DataError("evaluator failures must be strings");
        e.failures.push_back(f.get<std::string>());
      }
    }
    return e;
  };
}

}  // namespace curio::prompt
