// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace curio::cli {

struct Context {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  bool deterministic = false;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::vector<std::string> flags;
  std::function<int()> run;  // returns the exit code
};

/// Adds options to subcommands while recording each flag in the registry.
class Registry {
public:
  Registry(CLI::App& root, Context& ctx) : root_(root), ctx_(ctx) {}

  Command& add(const std::string& name, const std::string& description) {
    auto* sub = root_.add_subcommand(name, description);
    commands_.push_back(std::make_unique<Command>(Command{name, sub, {}, {}}));
    return *commands_.back();
  }

  template <class T>
  CLI::Option* option(Command& c, const std::string& flag, T& var, const std::string& desc) {
    c.flags.push_back(flag);
    return c.app->add_option(flag, var, desc)->capture_default_str();
  }

  CLI::Option* flag(Command& c, const std::string& flag, bool& var, const std::string& desc) {
    c.flags.push_back(flag);
    return c.app->add_flag(flag, var, desc);
  }

  Context& context() { return ctx_; }
  const std::vector<std::unique_ptr<Command>>& commands() const { return commands_; }

private:
  CLI::App& root_;
  Context& ctx_;
  std::vector<std::unique_ptr<Command>> commands_;
};

void register_data_commands(Registry& reg);
void register_train_commands(Registry& reg);
void register_prompt_commands(Registry& reg);

// ---- helpers shared by the command files

/// ConfigError naming `flag` when `value` is empty.
void require_flag(const std::string& value, const std::string& flag);

/// The explicit seed, or (outside --deterministic) a fresh random one. ConfigError when
/// --deterministic is set and no seed was given.
std::uint64_t resolve_seed(const Context& ctx, const std::optional<std::uint64_t>& seed);

/// Adds "generated_at" (UTC, ISO 8601) unless running deterministically.
void stamp(nlohmann::ordered_json& report, const Context& ctx);

/// Writes `text` to `path`, or to ctx.out when path is "-".
void write_output(const Context& ctx, const std::string& path, const std::string& text);

/// Reads a whole file, or stdin when path is "-".
std::string read_input(const std::string& path);

}  // namespace curio::cli
