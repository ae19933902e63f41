// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curio/prompt/taxonomy.hpp"

namespace curio::prompt {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string id;  // caller-chosen key; results are matched by id, never by arrival order
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  std::optional<std::string> attachment;  // opaque image handle for reward calls
  bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
  std::string content;
  std::string finish = "stop";
};

/// Wire form: {"model","temperature","messages":[{"role","content"}],"attachment"?}.
std::string request_to_json(const ChatRequest& r);
/// Parses {"content","finish"}; throws DataError on anything else.
ChatResponse response_from_json(std::string_view text);
std::string response_to_json(const ChatResponse& r);

struct ModelDefaults {
  std::string generator_model = "gpt-4.1";
  double promptgen_temperature = 1.0;
  double rubric_temperature = 0.2;
  std::string reward_model = "gpt-4.1-mini";
  double reward_temperature = 0.0;
};

/// System: the prompt-generation asset. User: the entity and its required keypoints.
ChatRequest build_promptgen_request(std::string_view item, const std::vector<Dimension>& dims,
                                    const ModelDefaults& models = {});

/// System: the rubric asset. User: the image-generation prompt.
ChatRequest build_rubric_request(std::string_view prompt, const ModelDefaults& models = {});

/// System: the reward asset. User: the reward template filled with the prompt and one rubric.
ChatRequest build_reward_request(std::string_view user_prompt, std::string_view key, std::string_view criterion,
                                 std::optional<std::string> attachment = std::nullopt,
                                 const ModelDefaults& models = {});

/// Replaces every {name} placeholder; throws ContractError if a placeholder is left unfilled.
std::string fill_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values);

}  // namespace curio::prompt
