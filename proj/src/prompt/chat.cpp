// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/chat.hpp"

#include <json.hpp>

#include "curio/errors.hpp"
#include "curio/prompt/assets.hpp"

namespace curio::prompt {

std::string request_to_json(const ChatRequest& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["temperature"] = r.temperature;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : r.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  if (r.attachment) j["attachment"] = *r.attachment;
  return j.dump();
}

ChatResponse response_from_json(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("LLM response is not a JSON object");
  if (!j.contains("content") || !j["content"].is_string()) throw DataError("LLM response lacks a string \"content\"");
  ChatResponse r;
  r.content = j["content"].get<std::string>();
  if (j.contains("finish")) {
    if (!j["finish"].is_string()) throw DataError("LLM response \"finish\" must be a string");
    r.finish = j["finish"].get<std::string>();
  }
  return r;
}

std::string response_to_json(const ChatResponse& r) {
  return nlohmann::ordered_json{{"content", r.content}, {"finish", r.finish}}.dump();
}

std::string fill_template(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const auto name = tmpl.substr(i + 1, close - i - 1);
        bool filled = false;
        for (const auto& [k, v] : values)
          if (k == name) {
            out += v;
            filled = true;
            break;
          }
        if (!filled) throw ContractError("template placeholder {" + std::string(name) + "} has no value");
        i = close + 1;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

ChatRequest build_promptgen_request(std::string_view item, const std::vector<Dimension>& dims,
                                    const ModelDefaults& models) {
  if (dims.empty()) throw ContractError("build_promptgen_request: at least one description dimension is required");
  if (item.empty()) throw ContractError("build_promptgen_request: item must be nonempty");
  std::string keypoints;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) keypoints += ", ";
    keypoints += std::string(dimension_keypoint(dims[i])) + " (" + std::string(dimension_name(dims[i])) + ")";
  }
  ChatRequest r;
  r.model = models.generator_model;
  r.temperature = models.promptgen_temperature;
  r.messages.push_back({"system", std::string(reasoner_prompt_for(Task::RlPromptgen))});
  r.messages.push_back({"user", "Entity: " + std::string(item) + "\nRequired keypoints: " + keypoints});
  return r;
}

ChatRequest build_rubric_request(std::string_view prompt, const ModelDefaults& models) {
  ChatRequest r;
  r.model = models.generator_model;
  r.temperature = models.rubric_temperature;
  r.messages.push_back({"system", std::string(reasoner_prompt_for(Task::Rubric))});
  r.messages.push_back({"user", std::string(prompt)});
  return r;
}

ChatRequest build_reward_request(std::string_view user_prompt, std::string_view key, std::string_view criterion,
                                 std::optional<std::string> attachment, const ModelDefaults& models) {
  ChatRequest r;
  r.model = models.reward_model;
  r.temperature = models.reward_temperature;
  r.attachment = std::move(attachment);
  r.messages.push_back({"system", std::string(reasoner_prompt_for(Task::Reward))});
  r.messages.push_back({"user", fill_template(reward_user_template(), {{"user_prompt", std::string(user_prompt)},
                                                                       {"key", std::string(key)},
                                                                       {"criterion", std::string(criterion)}})});
  return r;
}

}  // namespace curio::prompt
