// SPDX-License-Identifier: Apache-2.0
#include "curio/prompt/assets.hpp"

#include <span>
#include <string>
#include <utility>

#include "curio/errors.hpp"
#include "curio/rng.hpp"

namespace curio::prompt {

namespace detail {
std::span<const std::pair<std::string_view, std::string_view>> embedded_assets();
}

namespace {

constexpr std::array<std::pair<std::string_view, std::uint64_t>, 9> kChecksums{{
    {"captioning", 0x43224e2b1015d851ULL},
    {"general", 0x55f645d3318ef223ULL},
    {"geneval", 0x5b2cd969e85a1307ULL},
    {"longtext-cvtg", 0x44967293f24a19feULL},
    {"oneig", 0x442084417edec6e7ULL},
    {"reward", 0x157123e88aced77aULL},
    {"reward_user", 0xb138d826cb8c7a51ULL},
    {"rl-promptgen", 0x116d4d7da4ef60c0ULL},
    {"rubric", 0xc4ec79de3d25a9f4ULL},
}};

}  // namespace

std::string_view task_name(Task t) noexcept {
  switch (t) {
    case Task::General: return "general";
    case Task::Geneval: return "geneval";
    case Task::Oneig: return "oneig";
    case Task::LongtextCvtg: return "longtext-cvtg";
    case Task::Captioning: return "captioning";
    case Task::RlPromptgen: return "rl-promptgen";
    case Task::Rubric: return "rubric";
    case Task::Reward: return "reward";
  }
  return "general";
}

std::optional<Task> parse_task(std::string_view name) noexcept {
  for (auto t : kAllTasks)
    if (task_name(t) == name) return t;
  return std::nullopt;
}

std::uint64_t expected_checksum(std::string_view name) {
  for (const auto& [n, sum] : kChecksums)
    if (n == name) return sum;
  throw ConfigError("unknown prompt asset \"" + std::string(name) + "\"");
}

std::string_view asset(std::string_view name) {
  const auto want = expected_checksum(name);
  for (const auto& [n, text] : detail::embedded_assets()) {
    if (n != name) continue;
    if (fnv1a64(text) != want) throw IntegrityError("prompt asset \"" + std::string(name) + "\" failed its checksum");
    return text;
  }
  throw IntegrityError("prompt asset \"" + std::string(name) + "\" is not embedded in this build");
}

std::string_view reasoner_prompt_for(Task t) { return asset(task_name(t)); }

std::string_view reward_user_template() { return asset("reward_user"); }

}  // namespace curio::prompt
