// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "curio/prompt/chat.hpp"
#include "curio/prompt/llm_client.hpp"

namespace curio::prompt {

struct Evaluation {
  double score = 0.0;
  std::vector<std::string> failures;  // free-text summaries of failure cases
};

using Evaluator = std::function<Evaluation(const std::string& system_prompt)>;
using RewriteBuilder =
    std::function<ChatRequest(const std::string& system_prompt, const std::vector<std::string>& failures)>;

/// Default rewrite request: asks for an improved system prompt given the current one and its failures.
ChatRequest build_rewrite_request(const std::string& system_prompt, const std::vector<std::string>& failures,
                                  const ModelDefaults& models = {});

/// Evaluator backed by a shell command. The candidate prompt is written to a scratch file whose
/// path replaces every "{prompt_file}" in `command` (or is appended when there is none); the
/// command prints {"score": number, "failures": [string, ...]} on stdout. Any failure is a DataError.
Evaluator command_evaluator(std::string command);

struct SearchStep {
  std::size_t iteration = 0;  // 1-based
  std::optional<std::string> candidate;
  std::optional<double> score;
  bool accepted = false;
  std::string note;  // why a step was skipped
};

struct SearchResult {
  std::string best_prompt;
  double best_score = 0.0;
  std::vector<double> history;  // best score after each iteration; history[0] is the initial score
  std::vector<SearchStep> steps;
};

/// Greedy hill-climb: a candidate replaces the best prompt only if its score is strictly higher.
/// A failed rewrite or evaluation skips the iteration (recorded in `steps`).
SearchResult system_prompt_search(const std::string& initial, const Evaluator& evaluate, LlmClient& rewriter,
                                  std::size_t iterations, const RewriteBuilder& build = {});

}  // namespace curio::prompt
