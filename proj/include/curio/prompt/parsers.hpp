// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "curio/errors.hpp"
#include "curio/prompt/chat.hpp"

namespace curio::prompt {

enum class FormatRule {
  EmptyPayload,
  FencedPayload,     // markdown code fences around the payload
  NotAnObject,       // list, CSV line, bare scalar
  InvalidJson,
  SingleQuotes,      // keys/values must use double quotes
  TrailingComma,
  Comment,
  LineBreak,         // line break inside a key or value
  DuplicateKey,
  NonStringValue,
  EmptyKey,
  MissingKey,
  ExtraKey,
  TooManyRubrics,
  RenamedBaseKey,
  ReorderedBaseKey,
  SpacingChanged,
  VerdictFormat,
};

std::string_view rule_name(FormatRule r) noexcept;         // kebab-case identifier
std::string_view rule_description(FormatRule r) noexcept;  // one-line statement of the rule

/// A response that breaks its format contract. `fragment` is the offending text (truncated).
class FormatError : public DataError {
public:
  FormatError(FormatRule rule, std::string fragment, const std::string& detail = {});
  FormatRule rule() const noexcept { return rule_; }
  const std::string& fragment() const noexcept { return fragment_; }

private:
  FormatRule rule_;
  std::string fragment_;
};

// ---------------------------------------------------------------- prompt generation

inline constexpr std::array<std::string_view, 5> kPromptKeys{"prompt-1", "prompt-2", "prompt-3", "prompt-4", "prompt-5"};

using PromptSet = std::array<std::string, 5>;

/// Accepts only a JSON object with exactly the keys prompt-1..prompt-5, all strings.
PromptSet parse_promptgen_response(const ChatResponse& r);
/// Inverse of the parser: the canonical five-key object.
std::string serialize_prompts(const PromptSet& prompts);

// ---------------------------------------------------------------- rubrics

struct Rubric {
  std::string name;
  std::string check;
  bool operator==(const Rubric&) const = default;
};

inline constexpr std::string_view kGlobalRubricName = "Structural Integrity (Overall)";
inline constexpr std::string_view kGlobalRubricText =
    "Verify that the entire image is structurally coherent and physically plausible";

/// Generated rubrics in response order, then the global rubric as the final entry.
struct RubricSet {
  std::vector<Rubric> rubrics;
  std::size_t generated() const noexcept { return rubrics.empty() ? 0 : rubrics.size() - 1; }
};

struct RubricOptions {
  std::size_t max_generated = 10;
  /// Canonical rubric names. A key whose base (text before a trailing "(...)" qualifier)
  /// is a mangled form of one of these is rejected.
  std::vector<std::string> base_keys{"Object Count Consistency", "OCR Alignment", "Object Placement and Spatial Reasoning",
                                     "Attribute Accuracy",       "Action Accuracy", "Structural Integrity"};
};

RubricSet parse_rubrics(const ChatResponse& r, const RubricOptions& options = {});

/// Throws FormatError if `key` mangles a registered base key; returns normally otherwise.
void check_base_key(std::string_view key, const std::vector<std::string>& base_keys);

// ---------------------------------------------------------------- rewards

/// Exactly "1" or "0" after trimming whitespace.
int parse_verdict(const ChatResponse& r);

/// Mean of binary verdicts; ContractError when empty or when a value is not 0/1.
double aggregate_rewards(const std::vector<int>& verdicts);

}  // namespace curio::prompt
