// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>

#include <sys/wait.h>

namespace curio::prompt::detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

// Unique scratch file; removed on scope exit.
class TempFile {
public:
  explicit TempFile(std::string_view suffix = ".json") {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("curio-" + std::to_string(rd()) + "-" + std::to_string(counter++) + std::string(suffix));
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::filesystem::path& path() const { return path_; }

  bool write(std::string_view text) const {
    std::ofstream out(path_, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
  }

private:
  std::filesystem::path path_;
};

struct CommandOutput {
  bool started = false;
  int status = -1;  // exit status when the command exited normally, else -1
  std::string stdout_text;
};

/// Runs `cmd` through /bin/sh and captures its standard output.
inline CommandOutput run_shell(const std::string& cmd) {
  CommandOutput r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  r.started = true;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.stdout_text.append(buf, n);
  const int status = ::pclose(pipe);
  if (status != -1 && WIFEXITED(status)) r.status = WEXITSTATUS(status);
  return r;
}

}  // namespace curio::prompt::detail
