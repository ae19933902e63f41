// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>

#include "common.hpp"
#include "curio/cli.hpp"
#include "curio/errors.hpp"

namespace curio::cli {

namespace {

struct Tool {
  Context ctx;
  CLI::App app{"curio: data curation, bucket scheduling and training-math toolkit", "curio"};
  Registry reg{app, ctx};
  std::string config_path;
  std::vector<std::string> global_flags{"--config", "--deterministic"};

  Tool(std::ostream& out, std::ostream& err) {
    ctx.out = &out;
    ctx.err = &err;
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Config file; sections are subcommand names, keys are flag names")
        ->check(CLI::ExistingFile);
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_flag("--deterministic", ctx.deterministic,
                 "Omit timestamps from reports and require --seed for randomized subcommands");
    register_data_commands(reg);
    register_train_commands(reg);
    register_prompt_commands(reg);
  }

  const Command* find(const std::string& name) const {
    for (const auto& c : reg.commands())
      if (c->name == name) return c.get();
    return nullptr;
  }
};

}  // namespace

void require_flag(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError(flag + " is required");
}

std::uint64_t resolve_seed(const Context& ctx, const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (ctx.deterministic) throw ConfigError("--seed is required with --deterministic");
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void stamp(nlohmann::ordered_json& report, const Context& ctx) {
  if (ctx.deterministic) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  report["generated_at"] = buf;
}

void write_output(const Context& ctx, const std::string& path, const std::string& text) {
  if (path == "-") {
    *ctx.out << text;
    ctx.out->flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Tool tool(out, err);
  try {
    tool.app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return tool.app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return tool.app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    tool.app.exit(e, out, err);
    const CLI::App* failed = &tool.app;
    for (const auto* sub : tool.app.get_subcommands()) failed = sub;
    err << failed->help();
    return 2;
  }
  const auto subs = tool.app.get_subcommands();
  const Command* cmd = subs.empty() ? nullptr : tool.find(subs.front()->get_name());
  if (!cmd) {
    err << tool.app.help();
    return 2;
  }
  try {
    return cmd->run();
  } catch (const ConfigError& e) {
    err << "curio " << cmd->name << ": configuration error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "curio " << cmd->name << ": data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "curio " << cmd->name << ": error: " << e.what() << '\n';
    return 1;
  }
}

std::map<std::string, std::vector<std::string>> flag_registry() {
  std::ostringstream sink;
  Tool tool(sink, sink);
  std::map<std::string, std::vector<std::string>> out;
  out[""] = tool.global_flags;
  for (const auto& c : tool.reg.commands()) out[c->name] = c->flags;
  return out;
}

std::map<std::string, std::vector<std::string>> declared_flags() {
  std::ostringstream sink;
  Tool tool(sink, sink);
  auto names = [](const CLI::App& app) {
    std::vector<std::string> out;
    for (const auto* opt : app.get_options()) {
      for (const auto& n : opt->get_lnames())
        if (n != "help") out.push_back("--" + n);
    }
    return out;
  };
  std::map<std::string, std::vector<std::string>> out;
  out[""] = names(tool.app);
  for (const auto& c : tool.reg.commands()) out[c->name] = names(*c->app);
  return out;
}

std::string help_text(const std::string& subcommand) {
  std::ostringstream sink;
  Tool tool(sink, sink);
  if (subcommand.empty()) return tool.app.help();
  return tool.app.get_subcommand(subcommand)->help();
}

}  // namespace curio::cli
