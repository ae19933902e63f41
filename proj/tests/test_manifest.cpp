// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "curio/errors.hpp"
#include "curio/manifest.hpp"
#include "support.hpp"

using namespace curio;
using curio::testing::TempDir;

namespace {

const char* kThree =
    R"({"id":"a","path":"a.png","width":640,"height":480,"source":"public-real","caption":"a cat"})"
    "\n"
    R"({"id":"b","path":"b.jpg","width":1024,"height":768,"source":"private","caption":"two dogs on grass"})"
    "\n"
    R"({"id":"c","path":"c.png","width":512,"height":512,"source":"text-synthetic","caption":"","scores":{"aesthetic":4.5},"embedding_ref":2})"
    "\n";

Manifest parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in);
}

std::size_t reference_word_count(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

TEST_SUITE("manifest") {
  TEST_CASE("empty input yields an empty manifest") {
    CHECK(parse("").size() == 0);
  }

  TEST_CASE("records load in file order") {
    const auto m = parse(kThree);
    REQUIRE(m.size() == 3);
    CHECK(m.records[0].id == "a");
    CHECK(m.records[1].source == Source::Private);
    CHECK(m.records[2].scores.at("aesthetic") == 4.5);
    CHECK(m.records[2].embedding_ref == 2u);
  }

  TEST_CASE("missing width names the line") {
    const std::string text = std::string(R"({"id":"a","path":"a","width":2,"height":2,"source":"private","caption":""})") +
                             "\n" + R"({"id":"b","path":"b","height":2,"source":"private","caption":""})" + "\n";
    try {
      parse(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("width") != std::string::npos);
    }
  }

  TEST_CASE("malformed records are rejected") {
    auto line = [](const std::string& body) { return "{" + body + "}\n"; };
    const std::string ok = R"("id":"a","path":"a","width":2,"height":2,"source":"private","caption":"")";
    CHECK_THROWS_AS(parse(line(ok + R"(,"extra":1)")), ParseError);
    CHECK_THROWS_AS(parse(line(R"("id":"a","path":"a","width":0,"height":2,"source":"private","caption":"")")),
                    ParseError);
    CHECK_THROWS_AS(parse(line(R"("id":"a","path":"a","width":2,"height":2,"source":"web","caption":"")")),
                    ParseError);
    CHECK_THROWS_AS(parse(line(ok + R"(,"id":"b")")), ParseError);
    CHECK_THROWS_AS(parse("[1,2]\n"), ParseError);
    CHECK_THROWS_AS(parse("not json\n"), ParseError);
    CHECK_THROWS_AS(parse(line(ok) + "\n" + line(ok)), ParseError);  // blank line
  }

  TEST_CASE("duplicate ids are integrity errors") {
    const std::string rec = R"({"id":"a","path":"a","width":2,"height":2,"source":"private","caption":""})";
    CHECK_THROWS_AS(parse(rec + "\n" + rec + "\n"), IntegrityError);
  }

  TEST_CASE("canonical writer round-trips byte for byte") {
    // Non-canonical key order and spacing; the writer fixes both.
    const std::string messy =
        R"({ "caption":"x y", "source":"public-synthetic","height":3, "width":4,"path":"p","id":"k" })"
        "\n";
    const auto m = parse(messy);
    std::ostringstream once;
    write_manifest(once, m);
    CHECK(once.str() == R"({"id":"k","path":"p","width":4,"height":3,"source":"public-synthetic","caption":"x y"})"
                        "\n");
    std::ostringstream twice;
    write_manifest(twice, parse(once.str()));
    CHECK(twice.str() == once.str());
    CHECK(parse(once.str()) == m);

    std::ostringstream three;
    write_manifest(three, parse(kThree));
    CHECK(three.str() == kThree);
  }

  TEST_CASE("random manifests round-trip through files") {
    SplitMix64 rng(11);
    TempDir dir;
    auto m = curio::testing::random_manifest(rng, 200);
    for (std::size_t i = 0; i < m.size(); i += 7) m.records[i].scores["clarity"] = rng.unit() * 1000.0;
    for (std::size_t i = 0; i < m.size(); i += 5) m.records[i].embedding_ref = i;
    m.records[3].caption = "unicode \xE2\x80\x83 caf\xC3\xA9 \"quoted\"\n";
    write_manifest(dir / "m.jsonl", m);
    const auto back = load_manifest(dir / "m.jsonl");
    CHECK(back.records == m.records);
  }

  TEST_CASE("caption word counts") {
    CHECK(caption_word_count("") == 0);
    CHECK(caption_word_count("a photo of a cat") == 5);
    CHECK(caption_word_count("word  word\nword") == 3);
    CHECK(caption_word_count("  leading and trailing  ") == 3);
    CHECK(caption_word_count("no\xC2\xA0" "break") == 2);          // NBSP
    CHECK(caption_word_count("ideo\xE3\x80\x80" "graphic") == 2);  // U+3000
    CHECK(caption_word_count("caf\xC3\xA9 au lait") == 3);
  }

  TEST_CASE("word count matches a whitespace splitter on ASCII strings") {
    SplitMix64 rng(5);
    const std::string alphabet = "ab \t\n\r\v\fcd";
    for (int trial = 0; trial < 5000; ++trial) {
      std::string s;
      const auto len = rng.below(40);
      for (std::uint64_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
      REQUIRE_MESSAGE(caption_word_count(s) == reference_word_count(s), s);
    }
  }

  TEST_CASE("stats") {
    Manifest m;
    const auto empty = manifest_stats(m);
    CHECK(empty.count == 0);
    CHECK_FALSE(empty.mean_caption_words.has_value());
    CHECK(empty.per_source.size() == 4);

    m = parse(kThree);
    m.records[0].caption = "one two three four";
    m.records[1].caption = "one two three four five six";
    m.records.pop_back();
    CHECK(*manifest_stats(m).mean_caption_words == doctest::Approx(5.0));

    Manifest each;
    for (auto src : kAllSources) {
      ImageRecord r;
      r.id = std::string(to_string(src));
      r.source = src;
      each.records.push_back(r);
    }
    for (auto [src, n] : manifest_stats(each).per_source) CHECK(n == 1);

    Manifest long_caps;
    std::string cap;
    for (int w = 0; w < 109; ++w) cap += (w ? " w" : "w");
    for (int i = 0; i < 100; ++i) {
      ImageRecord r;
      r.id = std::to_string(i);
      r.caption = cap;
      long_caps.records.push_back(r);
    }
    CHECK(*manifest_stats(long_caps).mean_caption_words == 109.0);
  }
}
