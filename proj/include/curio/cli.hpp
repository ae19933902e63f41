// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace curio::cli {

/// Runs the tool. Exit codes: 0 success, 1 data error, 2 usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

inline constexpr const char* kSubcommands[] = {
    "filter",   "dedup",       "bucketize",       "schedule",      "sample-timesteps", "nft-eval",
    "gen-prompts", "rubric-validate", "prompt-search", "compute-compare", "stats"};

/// Flags each subcommand reads, keyed by subcommand name ("" holds the global flags).
std::map<std::string, std::vector<std::string>> flag_registry();

/// Long option names the argument parser actually accepts per subcommand (same keys as
/// flag_registry, --help excluded). A flag present here but absent there would be hidden.
std::map<std::string, std::vector<std::string>> declared_flags();

/// --help text of one subcommand ("" for the top level).
std::string help_text(const std::string& subcommand);

}  // namespace curio::cli
