// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace curio::prompt {

enum class Task { General, Geneval, Oneig, LongtextCvtg, Captioning, RlPromptgen, Rubric, Reward };

inline constexpr std::array<Task, 8> kAllTasks{Task::General,    Task::Geneval,     Task::Oneig,  Task::LongtextCvtg,
                                               Task::Captioning, Task::RlPromptgen, Task::Rubric, Task::Reward};

std::string_view task_name(Task t) noexcept;  // "general", "geneval", ..., "rl-promptgen", "rubric", "reward"
std::optional<Task> parse_task(std::string_view name) noexcept;

/// System prompt text for the task, byte-for-byte as stored. Throws IntegrityError
/// if the embedded text does not match its recorded checksum.
std::string_view reasoner_prompt_for(Task t);

/// User-message template for reward calls; placeholders {user_prompt}, {key}, {criterion}.
std::string_view reward_user_template();

/// Any embedded asset by file stem; throws ConfigError for unknown names.
std::string_view asset(std::string_view name);

/// Recorded FNV-1a 64 checksum of a named asset.
std::uint64_t expected_checksum(std::string_view name);

}  // namespace curio::prompt
