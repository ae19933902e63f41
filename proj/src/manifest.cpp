// SPDX-License-Identifier: Apache-2.0
#include "curio/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "curio/errors.hpp"

namespace curio {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::array<std::string_view, 8> kKeys{"id",      "path",   "width",  "height",
                                               "source",  "caption", "scores", "embedding_ref"};

bool known_key(std::string_view k) {
  for (auto key : kKeys)
    if (key == k) return true;
  return false;
}

// Parses one JSON object, rejecting duplicate top-level keys (nlohmann keeps the last one).
ojson parse_object(const std::string& line, std::size_t lineno) {
  std::set<std::string> seen;
  std::string duplicate;
  auto cb = [&](int depth, ojson::parse_event_t ev, ojson& parsed) {
    if (ev == ojson::parse_event_t::key && depth == 1) {
      auto k = parsed.get<std::string>();
      if (!seen.insert(k).second && duplicate.empty()) duplicate = k;
    }
    return true;
  };
  ojson j;
  try {
    j = ojson::parse(line, cb);
  } catch (const ojson::parse_error& e) {
    throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
  }
  if (!duplicate.empty()) throw ParseError(lineno, "duplicate key \"" + duplicate + "\"");
  if (!j.is_object()) throw ParseError(lineno, "record is not an object");
  return j;
}

std::int64_t positive_int(const ojson& j, const char* key, std::size_t lineno) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ParseError(lineno, std::string(key) + " must be an integer");
  auto x = v.get<std::int64_t>();
  if (x < 1) throw ParseError(lineno, std::string(key) + " must be >= 1");
  return x;
}

std::string string_field(const ojson& j, const char* key, std::size_t lineno) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw ParseError(lineno, std::string(key) + " must be a string");
  return v.get<std::string>();
}

ImageRecord record_from_json(const ojson& j, std::size_t lineno) {
  for (const auto& [k, _] : j.items())
    if (!known_key(k)) throw ParseError(lineno, "unknown key \"" + k + "\"");
  for (const char* req : {"id", "path", "width", "height", "source", "caption"})
    if (!j.contains(req)) throw ParseError(lineno, std::string("missing field \"") + req + "\"");

  ImageRecord r;
  r.id = string_field(j, "id", lineno);
  r.path = string_field(j, "path", lineno);
  r.width = positive_int(j, "width", lineno);
  r.height = positive_int(j, "height", lineno);
  auto src = parse_source(string_field(j, "source", lineno));
  if (!src) throw ParseError(lineno, "unknown source \"" + j.at("source").get<std::string>() + "\"");
  r.source = *src;
  r.caption = string_field(j, "caption", lineno);

  if (j.contains("scores")) {
    const auto& s = j.at("scores");
    if (!s.is_object()) throw ParseError(lineno, "scores must be an object");
    for (const auto& [k, v] : s.items()) {
      if (!v.is_number()) throw ParseError(lineno, "score \"" + k + "\" is not a number");
      double x = v.get<double>();
      if (!std::isfinite(x)) throw ParseError(lineno, "score \"" + k + "\" is not finite");
      r.scores[k] = x;
    }
  }
  if (j.contains("embedding_ref")) {
    const auto& e = j.at("embedding_ref");
    if (!e.is_number_unsigned()) throw ParseError(lineno, "embedding_ref must be a nonnegative integer");
    r.embedding_ref = e.get<std::uint64_t>();
  }
  return r;
}

bool is_unicode_space(char32_t c) {
  if (c >= 0x09 && c <= 0x0D) return true;
  switch (c) {
    case 0x20: case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Decodes the next code point; malformed sequences yield one byte as U+FFFD.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (std::size_t k = 1; k < len; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

}  // namespace

std::string_view to_string(Source s) noexcept {
  switch (s) {
    case Source::PublicReal: return "public-real";
    case Source::PublicSynthetic: return "public-synthetic";
    case Source::Private: return "private";
    case Source::TextSynthetic: return "text-synthetic";
  }
  return "public-real";
}

std::optional<Source> parse_source(std::string_view s) noexcept {
  for (auto src : kAllSources)
    if (to_string(src) == s) return src;
  return std::nullopt;
}

void check_unique_ids(const Manifest& m) {
  std::set<std::string_view> ids;
  for (const auto& r : m.records)
    if (!ids.insert(r.id).second) throw IntegrityError("duplicate record id \"" + r.id + "\"");
}

Manifest parse_manifest(std::istream& in) {
  Manifest m;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError(lineno, "empty line");
    auto rec = record_from_json(parse_object(line, lineno), lineno);
    if (!ids.insert(rec.id).second)
      throw IntegrityError("line " + std::to_string(lineno) + ": duplicate record id \"" + rec.id + "\"");
    m.records.push_back(std::move(rec));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  auto m = parse_manifest(in);
  m.provenance = "loaded from " + path.string();
  return m;
}

std::string canonical_line(const ImageRecord& r) {
  ojson j;
  j["id"] = r.id;
  j["path"] = r.path;
  j["width"] = r.width;
  j["height"] = r.height;
  j["source"] = std::string(to_string(r.source));
  j["caption"] = r.caption;
  if (!r.scores.empty()) {
    ojson s = ojson::object();
    for (const auto& [k, v] : r.scores) s[k] = v;
    j["scores"] = std::move(s);
  }
  if (r.embedding_ref) j["embedding_ref"] = *r.embedding_ref;
  return j.dump(-1, ' ', false, ojson::error_handler_t::strict);
}

void write_manifest(std::ostream& out, const Manifest& m) {
  for (const auto& r : m.records) out << canonical_line(r) << '\n';
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path.string());
  write_manifest(out, m);
}

std::size_t caption_word_count(std::string_view caption) {
  std::size_t words = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < caption.size();) {
    bool space = is_unicode_space(next_code_point(caption, i));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

ManifestStats manifest_stats(const Manifest& m) {
  ManifestStats st;
  for (auto s : kAllSources) st.per_source[s] = 0;
  std::size_t total_words = 0;
  for (const auto& r : m.records) {
    total_words += caption_word_count(r.caption);
    ++st.per_source[r.source];
  }
  st.count = m.records.size();
  if (st.count > 0) st.mean_caption_words = static_cast<double>(total_words) / static_cast<double>(st.count);
  return st;
}

}  // namespace curio
