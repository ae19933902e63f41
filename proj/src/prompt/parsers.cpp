// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/parsers.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include <json.hpp>

namespace curio::prompt {

namespace {

using nlohmann::json;

std::string truncate(std::string_view s, std::size_t n = 80) {
  return std::string(s.substr(0, n)) + (s.size() > n ? "..." : "");
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Parses a top-level JSON object, recording its keys in order so duplicates can be reported
// (the DOM would silently keep the last one).
struct ParsedObject {
  json value;
  std::vector<std::string> keys;
};

ParsedObject parse_object(std::string_view text) {
  ParsedObject out;
  json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) out.keys.push_back(parsed.get<std::string>());
    return true;
  };
  try {
    out.value = json::parse(text.begin(), text.end(), cb);
  } catch (const json::exception& e) {
    throw FormatError(FormatRule::InvalidJson, truncate(text), e.what());
  }
  if (!out.value.is_object()) throw FormatError(FormatRule::NotAnObject, truncate(text));
  std::set<std::string_view> seen;
  for (const auto& k : out.keys)
    if (!seen.insert(k).second) throw FormatError(FormatRule::DuplicateKey, k);
  return out;
}

// Shape checks shared by both object parsers; returns the trimmed payload.
std::string_view check_envelope(std::string_view raw) {
  const auto text = trim(raw);
  if (text.empty()) throw FormatError(FormatRule::EmptyPayload, "");
  if (text.starts_with("```")) throw FormatError(FormatRule::FencedPayload, truncate(text));
  if (text.front() == '[') throw FormatError(FormatRule::NotAnObject, truncate(text), "payload is a list");
  if (text.front() == '"') throw FormatError(FormatRule::NotAnObject, truncate(text), "payload looks like a CSV line");
  if (text.front() != '{') throw FormatError(FormatRule::NotAnObject, truncate(text));
  return text;
}

// Lexical rules JSON parsers reject without saying why.
void prescan(std::string_view text) {
  bool in_string = false, escape = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escape) {
        if (c == 'n' || c == 'r') throw FormatError(FormatRule::LineBreak, truncate(text.substr(start)));
        escape = false;
      } else if (c == '\\') {
        escape = true;
      } else if (c == '"') {
        in_string = false;
      } else if (c == '\n' || c == '\r') {
        throw FormatError(FormatRule::LineBreak, truncate(text.substr(start)));
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        start = i;
        break;
      case '\'': throw FormatError(FormatRule::SingleQuotes, truncate(text.substr(i)));
      case '#': throw FormatError(FormatRule::Comment, truncate(text.substr(i)));
      case '/':
        if (i + 1 < text.size() && (text[i + 1] == '/' || text[i + 1] == '*'))
          throw FormatError(FormatRule::Comment, truncate(text.substr(i)));
        break;
      case ',': {
        std::size_t j = i + 1;
        while (j < text.size() && is_space(text[j])) ++j;
        if (j < text.size() && (text[j] == '}' || text[j] == ']'))
          throw FormatError(FormatRule::TrailingComma, truncate(text.substr(i > 20 ? i - 20 : 0, 40)));
        break;
      }
      default: break;
    }
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> stemmed_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) {
      auto t = lower(s.substr(i, j - i));
      if (t.size() > 5 && t.ends_with("ing")) t.resize(t.size() - 3);
      else if (t.size() > 3 && t.ends_with('s') && !t.ends_with("ss")) t.pop_back();
      out.push_back(std::move(t));
    }
    i = j;
  }
  return out;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  for (char c : trim(s)) {
    if (is_space(c)) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += c;
    }
  }
  return out;
}

// "Attribute Accuracy (Kickball Color)" -> "Attribute Accuracy ".
std::string_view base_part(std::string_view key) {
  const auto t = trim(key);
  if (t.ends_with(')')) {
    const auto open = t.rfind('(');
    if (open != std::string_view::npos && open > 0) return key.substr(0, static_cast<std::size_t>(t.data() - key.data()) + open);
  }
  return key;
}

bool is_subsequence(const std::vector<std::string>& small, const std::vector<std::string>& big) {
  std::size_t j = 0;
  for (const auto& t : big)
    if (j < small.size() && small[j] == t) ++j;
  return j == small.size();
}

}  // namespace

std::string_view rule_name(FormatRule r) noexcept {
  switch (r) {
    case FormatRule::EmptyPayload: return "empty-payload";
    case FormatRule::FencedPayload: return "fenced-payload";
    case FormatRule::NotAnObject: return "not-an-object";
    case FormatRule::InvalidJson: return "invalid-json";
    case FormatRule::SingleQuotes: return "single-quotes";
    case FormatRule::TrailingComma: return "trailing-comma";
    case FormatRule::Comment: return "comment";
    case FormatRule::LineBreak: return "line-break";
    case FormatRule::DuplicateKey: return "duplicate-key";
    case FormatRule::NonStringValue: return "non-string-value";
    case FormatRule::EmptyKey: return "empty-key";
    case FormatRule::MissingKey: return "missing-key";
    case FormatRule::ExtraKey: return "extra-key";
    case FormatRule::TooManyRubrics: return "too-many-rubrics";
    case FormatRule::RenamedBaseKey: return "renamed-base-key";
    case FormatRule::ReorderedBaseKey: return "reordered-base-key";
    case FormatRule::SpacingChanged: return "spacing-changed";
    case FormatRule::VerdictFormat: return "verdict-format";
  }
  return "invalid-json";
}

std::string_view rule_description(FormatRule r) noexcept {
  switch (r) {
    case FormatRule::EmptyPayload: return "response is empty";
    case FormatRule::FencedPayload: return "payload must not be wrapped in markdown fences";
    case FormatRule::NotAnObject: return "payload must be a single JSON object, not a list or CSV";
    case FormatRule::InvalidJson: return "payload must be strictly valid JSON";
    case FormatRule::SingleQuotes: return "keys and values must use double quotes";
    case FormatRule::TrailingComma: return "trailing commas are not allowed";
    case FormatRule::Comment: return "comments are not allowed";
    case FormatRule::LineBreak: return "keys and values must not contain line breaks";
    case FormatRule::DuplicateKey: return "keys must be unique";
    case FormatRule::NonStringValue: return "values must be strings";
    case FormatRule::EmptyKey: return "keys must be nonempty";
    case FormatRule::MissingKey: return "a required key is missing";
    case FormatRule::ExtraKey: return "no keys beyond the required ones are allowed";
    case FormatRule::TooManyRubrics: return "at most the configured number of rubrics is allowed";
    case FormatRule::RenamedBaseKey: return "base key names must not be renamed";
    case FormatRule::ReorderedBaseKey: return "base key words must not be reordered";
    case FormatRule::SpacingChanged: return "base key spacing must not change";
    case FormatRule::VerdictFormat: return "verdict must be exactly 1 or 0";
  }
  return "";
}

FormatError::FormatError(FormatRule rule, std::string fragment, const std::string& detail)
    : DataError(std::string(rule_name(rule)) + ": " + std::string(rule_description(rule)) +
                (detail.empty() ? "" : " (" + detail + ")") + (fragment.empty() ? "" : " near \"" + fragment + "\"")),
      rule_(rule),
      fragment_(std::move(fragment)) {}

PromptSet parse_promptgen_response(const ChatResponse& r) {
  const auto text = check_envelope(r.content);
  const auto obj = parse_object(text);
  for (const auto& k : obj.keys)
    if (std::find(kPromptKeys.begin(), kPromptKeys.end(), k) == kPromptKeys.end())
      throw FormatError(FormatRule::ExtraKey, truncate(k));
  PromptSet out;
  for (std::size_t i = 0; i < kPromptKeys.size(); ++i) {
    const std::string key(kPromptKeys[i]);
    if (!obj.value.contains(key)) throw FormatError(FormatRule::MissingKey, key);
    const auto& v = obj.value[key];
    if (!v.is_string()) throw FormatError(FormatRule::NonStringValue, key);
    out[i] = v.get<std::string>();
  }
  return out;
}

std::string serialize_prompts(const PromptSet& prompts) {
  nlohmann::ordered_json j;
  for (std::size_t i = 0; i < kPromptKeys.size(); ++i) j[std::string(kPromptKeys[i])] = prompts[i];
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

void check_base_key(std::string_view key, const std::vector<std::string>& base_keys) {
  const auto base = base_part(key);  // keeps the space before a qualifier
  const auto collapsed = collapse_spaces(base);
  for (const auto& b : base_keys) {
    if (collapsed != b) continue;
    // Only "Base" or "Base (qualifier)" keep the spacing intact.
    if (base == b || base == b + " ") return;
    throw FormatError(FormatRule::SpacingChanged, std::string(key), "base key \"" + b + "\"");
  }
  const auto tokens = stemmed_tokens(base);
  if (tokens.empty()) return;
  for (const auto& b : base_keys) {
    const auto btokens = stemmed_tokens(b);
    const bool subset = std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
      return std::find(btokens.begin(), btokens.end(), t) != btokens.end();
    });
    if (!subset) continue;
    throw FormatError(is_subsequence(tokens, btokens) ? FormatRule::RenamedBaseKey : FormatRule::ReorderedBaseKey,
                      std::string(key), "base key \"" + b + "\"");
  }
}

RubricSet parse_rubrics(const ChatResponse& r, const RubricOptions& options) {
  const auto text = check_envelope(r.content);
  prescan(text);
  const auto obj = parse_object(text);
  if (obj.keys.size() > options.max_generated)
    throw FormatError(FormatRule::TooManyRubrics, std::to_string(obj.keys.size()) + " entries",
                      "limit is " + std::to_string(options.max_generated));
  RubricSet set;
  for (const auto& k : obj.keys) {
    if (trim(k).empty()) throw FormatError(FormatRule::EmptyKey, k);
    const auto& v = obj.value[k];
    if (!v.is_string()) throw FormatError(FormatRule::NonStringValue, truncate(k));
    auto check = v.get<std::string>();
    if (k.find_first_of("\r\n") != std::string::npos || check.find_first_of("\r\n") != std::string::npos)
      throw FormatError(FormatRule::LineBreak, truncate(k));
    check_base_key(k, options.base_keys);
    set.rubrics.push_back({k, std::move(check)});
  }
  set.rubrics.push_back({std::string(kGlobalRubricName), std::string(kGlobalRubricText)});
  return set;
}

int parse_verdict(const ChatResponse& r) {
  const auto t = trim(r.content);
  if (t == "1") return 1;
  if (t == "0") return 0;
  throw FormatError(FormatRule::VerdictFormat, truncate(t, 40));
}

double aggregate_rewards(const std::vector<int>& verdicts) {
  if (verdicts.empty()) throw ContractError("aggregate_rewards: no verdicts");
  double sum = 0.0;
  for (int v : verdicts) {
    if (v != 0 && v != 1) throw ContractError("aggregate_rewards: verdicts must be 0 or 1");
    sum += v;
  }
  return sum / static_cast<double>(verdicts.size());
}

}  // namespace curio::prompt
