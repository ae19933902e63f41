// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

enum class Source { PublicReal, PublicSynthetic, Private, TextSynthetic };

inline constexpr std::array<Source, 4> kAllSources{Source::PublicReal, Source::PublicSynthetic,
                                                   Source::Private, Source::TextSynthetic};

std::string_view to_string(Source s) noexcept;
std::optional<Source> parse_source(std::string_view s) noexcept;

struct ImageRecord {
  std::string id;
  std::string path;
  std::int64_t width = 1;
  std::int64_t height = 1;
  Source source = Source::PublicReal;
  std::string caption;
  std::map<std::string, double> scores;
  std::optional<std::uint64_t> embedding_ref;

  bool operator==(const ImageRecord&) const = default;
};

struct Manifest {
  std::vector<ImageRecord> records;
  std::string provenance;

  std::size_t size() const noexcept { return records.size(); }
  bool operator==(const Manifest&) const = default;
};

/// Throws IntegrityError on the first duplicate id.
void check_unique_ids(const Manifest& m);

// Line-delimited persistence. Every line is one flat JSON object with keys drawn
// from {id, path, width, height, source, caption, scores, embedding_ref}.
Manifest parse_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);

/// Canonical single-line form of a record (fixed key order, UTF-8, no trailing newline).
std::string canonical_line(const ImageRecord& r);
void write_manifest(std::ostream& out, const Manifest& m);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// Number of maximal whitespace-separated tokens. Unicode whitespace code points
/// (NBSP, ideographic space, line/paragraph separators, ...) count as separators.
std::size_t caption_word_count(std::string_view caption);

struct ManifestStats {
  std::size_t count = 0;
  std::optional<double> mean_caption_words;  // absent for an empty manifest
  std::map<Source, std::size_t> per_source;  // always holds all four sources
};

ManifestStats manifest_stats(const Manifest& m);

}  // namespace curio
