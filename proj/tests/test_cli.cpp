// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "curio/cli.hpp"
#include "curio/embedding_store.hpp"
#include "curio/image.hpp"
#include "curio/manifest.hpp"
#include "support.hpp"

using namespace curio;
namespace ct = curio::testing;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "curio");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell; returns its exit status.
int shell(const std::string& args, const std::filesystem::path& out) {
  const std::string cmd = std::string(CURIO_BINARY) + " " + args + " > '" + out.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

RgbImage noise_image(SplitMix64& rng, int side) {
  RgbImage img(side, side);
  for (Eigen::Index y = 0; y < side; ++y)
    for (Eigen::Index x = 0; x < side; ++x) {
      const auto v = static_cast<std::uint8_t>(rng.below(256));
      img.r(y, x) = img.g(y, x) = img.b(y, x) = v;
    }
  return img;
}

// Three 512x512 noise images: a, b (exact duplicate embedding of a) and c.
struct FilterFixture {
  ct::TempDir dir;
  std::filesystem::path manifest = dir / "in.jsonl", store = dir / "emb.lnse";

  FilterFixture() {
    SplitMix64 rng(5);
    Manifest m;
    EmbeddingStore s;
    s.dimension = 4;
    const char* ids[] = {"a", "b", "c"};
    for (std::size_t i = 0; i < 3; ++i) {
      const auto png = encode_png(noise_image(rng, 512));
      ct::write_file(dir / (std::string(ids[i]) + ".png"), std::string(png.begin(), png.end()));
      ImageRecord r;
      r.id = ids[i];
      r.path = std::string(ids[i]) + ".png";
      r.width = r.height = 512;
      r.source = Source::PublicReal;
      r.caption = "noise";
      r.scores = {{"nsfw", 0.1}, {"aesthetic", 5.0}, {"watermark", 0.1}};
      r.embedding_ref = i;
      m.records.push_back(r);
      Eigen::VectorXf v(4);
      if (i == 2) v << 0, 1, 0, 0;
      else v << 1, 0, 0, 0;
      s.append(embedding_id_hash(r.id), v);
    }
    write_manifest(manifest, m);
    write_embedding_store(store, s);
  }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("bucket list") {
    const auto r = run({"bucketize", "--list"});
    CHECK(r.code == 0);
    CHECK(count_lines(r.out) == 27);
    CHECK(has(r.out, "608 x 448"));
  }

  TEST_CASE("usage errors exit 2") {
    auto r = run({"no-such-command"});
    CHECK(r.code == 2);
    CHECK(has(r.err, "Usage"));
    r = run({});
    CHECK(r.code == 2);
    r = run({"schedule", "--world-size", "0", "--seed", "1"});
    CHECK(r.code == 2);
    CHECK(has(r.err, "world-size"));
    r = run({"bucketize", "--bogus"});
    CHECK(r.code == 2);
    r = run({"compute-compare", "--format", "xml", "--input", "x"});
    CHECK(r.code == 2);
  }

  TEST_CASE("every parsed flag is registered and documented") {
    const auto reg = cli::flag_registry();
    const auto declared = cli::declared_flags();
    REQUIRE(reg.size() == std::size(cli::kSubcommands) + 1);
    for (const auto& [name, flags] : declared) {
      REQUIRE(reg.count(name) == 1);
      auto a = flags, b = reg.at(name);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      CHECK_MESSAGE(a == b, "subcommand " << name);
      const auto help = cli::help_text(name);
      for (const auto& f : b) CHECK_MESSAGE(has(help, f), name << " help lacks " << f);
    }
    for (const char* sub : cli::kSubcommands) CHECK(reg.count(sub) == 1);
  }

  TEST_CASE("filter end to end") {
    FilterFixture fx;
    const auto kept = fx.dir / "kept.jsonl", removed = fx.dir / "removed.jsonl";
    auto r = run({"filter", "--input", fx.manifest.string(), "--out", kept.string(), "--removed", removed.string(),
                  "--embeddings", fx.store.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto k = load_manifest(kept);
    REQUIRE(k.records.size() == 2);
    CHECK(k.records[0].id == "a");
    CHECK(k.records[1].id == "c");
    CHECK(load_manifest(removed).records.at(0).id == "b");
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report.dump().find("dedup") != std::string::npos);
    r = run({"filter", "--input", fx.manifest.string(), "--out", kept.string(), "--disable", "dedup"});
    CHECK(r.code == 0);
    CHECK(load_manifest(kept).records.size() == 3);
    r = run({"filter", "--input", fx.manifest.string(), "--out", kept.string()});
    CHECK(r.code == 2);  // dedup needs embeddings
    r = run({"filter", "--input", (fx.dir / "missing.jsonl").string(), "--out", kept.string(), "--disable", "dedup"});
    CHECK(r.code == 1);
    r = run({"filter", "--input", fx.manifest.string(), "--out", kept.string(), "--disable", "sharpness"});
    CHECK(r.code == 2);
  }

  TEST_CASE("filter output does not depend on jobs") {
    FilterFixture fx;
    std::string first;
    for (const char* jobs : {"1", "3"}) {
      const auto out = fx.dir / (std::string("kept") + jobs);
      const auto r = run({"--deterministic", "filter", "--input", fx.manifest.string(), "--out", out.string(),
                          "--embeddings", fx.store.string(), "--jobs", jobs});
      REQUIRE(r.code == 0);
      const auto text = ct::read_file(out) + r.out;
      if (first.empty()) first = text;
      CHECK(text == first);
    }
  }

  TEST_CASE("dedup, stats and bucketize on a manifest") {
    FilterFixture fx;
    const auto kept = fx.dir / "dedup.jsonl";
    auto r = run({"dedup", "--input", fx.manifest.string(), "--out", kept.string(), "--embeddings", fx.store.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(load_manifest(kept).records.size() == 2);
    r = run({"stats", "--input", fx.manifest.string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["count"] == 3);
    r = run({"bucketize", "--input", fx.manifest.string(), "--out", "-"});
    CHECK(r.code == 0);
    CHECK(count_lines(r.out) == 3);
    CHECK(has(r.out, R"("width":512,"height":512)"));
  }

  TEST_CASE("config file values yield to flags") {
    ct::TempDir dir;
    SplitMix64 rng(1);
    const auto manifest = dir / "m.jsonl";
    write_manifest(manifest, ct::random_manifest(rng, 200));
    ct::write_file(dir / "c.toml", "[schedule]\nworld-size = 3\nseed = 4\n");
    const auto plan = (dir / "plan.jsonl").string();
    auto r = run({"--config", (dir / "c.toml").string(), "schedule", "--input", manifest.string(), "--out", plan});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(nlohmann::json::parse(r.out)["world_size"] == 3);
    r = run({"--config", (dir / "c.toml").string(), "schedule", "--input", manifest.string(), "--out", plan,
             "--world-size", "2"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["world_size"] == 2);
    ct::write_file(dir / "bad.toml", "[schedule]\nworld-siz = 3\n");
    r = run({"--config", (dir / "bad.toml").string(), "schedule", "--input", manifest.string(), "--out", plan});
    CHECK(r.code == 2);
  }

  TEST_CASE("deterministic runs need a seed and repeat exactly") {
    auto r = run({"--deterministic", "sample-timesteps", "--mu", "1.3", "--count", "5"});
    CHECK(r.code == 2);
    CHECK(has(r.err, "--seed"));
    const auto a = run({"--deterministic", "sample-timesteps", "--tokens", "4096", "--count", "50", "--seed", "9"});
    const auto b = run({"--deterministic", "sample-timesteps", "--tokens", "4096", "--count", "50", "--seed", "9"});
    REQUIRE(a.code == 0);
    CHECK(count_lines(a.out) == 50);
    CHECK(a.out == b.out);
    CHECK(run({"sample-timesteps", "--count", "5"}).code == 2);

    ct::TempDir dir;
    SplitMix64 rng(2);
    const auto manifest = dir / "m.jsonl";
    write_manifest(manifest, ct::random_manifest(rng, 500));
    std::string first_plan, first_report;
    for (const char* jobs : {"1", "2", "4"}) {
      const auto plan = dir / (std::string("plan") + jobs);
      const auto s = run({"--deterministic", "schedule", "--input", manifest.string(), "--out", plan.string(),
                          "--world-size", "4", "--seed", "11", "--mode", "synchronized", "--jobs", jobs});
      REQUIRE_MESSAGE(s.code == 0, s.err);
      if (first_plan.empty()) {
        first_plan = ct::read_file(plan);
        first_report = s.out;
      }
      CHECK(ct::read_file(plan) == first_plan);
      CHECK(s.out == first_report);
    }
    CHECK_FALSE(has(first_report, "generated_at"));
  }

  TEST_CASE("nft-eval") {
    ct::TempDir dir;
    const auto in = dir / "t.jsonl";
    ct::write_file(in, R"({"group":"p","v_old":[0],"v_theta":[1],"v_target":[1],"raw_reward":1})"
                       "\n"
                       R"({"group":"p","v_old":[0],"v_theta":[1],"v_target":[1],"raw_reward":0})"
                       "\n");
    auto r = run({"nft-eval", "--input", in.string(), "--zc-mode", "group", "--kl-coeff", "0"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    std::istringstream lines(r.out);
    std::string l1, l2;
    std::getline(lines, l1);
    std::getline(lines, l2);
    const auto j1 = nlohmann::json::parse(l1), j2 = nlohmann::json::parse(l2);
    CHECK(j1["reward"] == 1.0);
    CHECK(j1["nft_loss"] == 0.0);  // v+ = v_theta = target
    CHECK(j2["reward"] == 0.0);
    CHECK(j2["nft_loss"].get<double>() == doctest::Approx(4.0));  // v- = -1
    ct::write_file(in, R"({"v_old":[0],"v_theta":[1],"v_target":[1]})"
                       "\n");
    r = run({"nft-eval", "--input", in.string()});
    CHECK(r.code == 1);
    CHECK(has(r.err, "line 1"));
    CHECK(run({"nft-eval", "--input", in.string(), "--beta", "0"}).code == 2);
  }

  TEST_CASE("compute-compare") {
    ct::TempDir dir;
    const auto in = dir / "b.json";
    ct::write_file(in, R"({"budgets":[{"label":"other","gpu_hours":314000,"peak_tflops":989.5},)"
                       R"({"label":"ours","gpu_hours":192000,"peak_tflops":312}]})");
    auto r = run({"compute-compare", "--input", in.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(has(r.out, "19.3%"));
    CHECK(has(r.out, "reference: other"));
    CHECK(has(r.out, "note: "));
    r = run({"compute-compare", "--input", in.string(), "--reference", "ours", "--format", "json"});
    CHECK(r.code == 0);
    CHECK(has(r.out, R"("reference": "ours")"));
    CHECK(run({"compute-compare", "--input", in.string(), "--reference", "nobody"}).code == 2);
    ct::write_file(in, R"({"budgets":[]})");
    CHECK(run({"compute-compare", "--input", in.string()}).code == 1);
  }

  TEST_CASE("rubric-validate") {
    ct::TempDir dir;
    const auto in = dir / "r.txt";
    ct::write_file(in, R"({"OCR Alignment": "Text reads OPEN."})");
    auto r = run({"rubric-validate", "--input", in.string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["valid"] == true);
    ct::write_file(in, R"({"Count Object": "One cat."})");
    r = run({"rubric-validate", "--input", in.string()});
    CHECK(r.code == 1);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["valid"] == false);
    CHECK(j["rule"] == "reordered-base-key");
    ct::write_file(in, "0\n");
    CHECK(run({"rubric-validate", "--input", in.string(), "--kind", "verdict"}).code == 0);
    CHECK(run({"rubric-validate", "--input", in.string(), "--kind", "prompts"}).code == 1);
  }

  TEST_CASE("gen-prompts with a scripted model") {
    ct::TempDir dir;
    ct::write_file(dir / "prompts.json",
                   R"({"content":"{\"prompt-1\":\"p1\",\"prompt-2\":\"p2\",\"prompt-3\":\"p3\",\"prompt-4\":\"p4\",\"prompt-5\":\"p5\"}"})");
    ct::write_file(dir / "rubrics.json", R"({"content":"{\"Attribute Accuracy\": \"Colors match.\"}"})");
    const auto script = dir / "llm.sh";
    ct::write_file(script, "#!/bin/sh\nin=$(cat)\ncase \"$in\" in\n  *'\"temperature\":0.2'*) cat '" +
                               (dir / "rubrics.json").string() + "' ;;\n  *) cat '" + (dir / "prompts.json").string() +
                               "' ;;\nesac\n");
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    const std::string taxonomy = CURIO_SOURCE_DIR "/data/taxonomy.json";
    auto r = run({"--deterministic", "gen-prompts", "--taxonomy", taxonomy, "--count", "4", "--seed", "3",
                  "--llm-cmd", script.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    REQUIRE(count_lines(r.out) == 4);
    std::istringstream lines(r.out);
    for (std::string l; std::getline(lines, l);) {
      const auto j = nlohmann::json::parse(l);
      const auto p = j["prompt"].get<std::string>();
      CHECK((p.size() == 2 && p[0] == 'p'));
      CHECK(j["rubrics"].size() == 2);
      CHECK(j["rubrics"][1][0] == "Structural Integrity (Overall)");
    }
    const auto again = run({"--deterministic", "gen-prompts", "--taxonomy", taxonomy, "--count", "4", "--seed", "3",
                            "--llm-cmd", script.string()});
    CHECK(again.out == r.out);
    const auto dry = run({"--deterministic", "gen-prompts", "--taxonomy", taxonomy, "--count", "2", "--seed", "3",
                          "--dry-run"});
    CHECK(dry.code == 0);
    CHECK(count_lines(dry.out) == 2);
    CHECK(has(dry.out, "promptgen-0"));
    const auto fail = run({"--deterministic", "gen-prompts", "--taxonomy", taxonomy, "--count", "2", "--seed", "3",
                           "--llm-cmd", "echo '{\"content\":\"not json\"}'", "--attempts", "1"});
    CHECK(fail.code == 1);
    CHECK(has(fail.err, "item"));
  }

  TEST_CASE("prompt-search with scripted commands") {
    ct::TempDir dir;
    const auto initial = dir / "init.txt";
    ct::write_file(initial, "short");
    ct::write_file(dir / "rewrite.json", R"({"content":"a considerably longer system prompt"})");
    const std::string eval = "sh -c 'printf \"{\\\"score\\\": %d}\" $(wc -c < \"$0\")' {prompt_file}";
    const std::string llm = "cat '" + (dir / "rewrite.json").string() + "'";
    const auto report = dir / "report.json";
    auto r = run({"--deterministic", "prompt-search", "--initial", initial.string(), "--eval-cmd", eval, "--llm-cmd", llm,
                  "--iterations", "3", "--report", report.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out == "a considerably longer system prompt");
    const auto j = nlohmann::json::parse(ct::read_file(report));
    CHECK(j["history"] == nlohmann::json::array({5.0, 35.0, 35.0, 35.0}));
    CHECK(j["steps"][0]["accepted"] == true);
    CHECK(j["steps"][1]["accepted"] == false);
    CHECK(run({"prompt-search", "--eval-cmd", eval, "--llm-cmd", llm}).code == 2);
    CHECK(run({"prompt-search", "--task", "general", "--initial", initial.string(), "--eval-cmd", eval}).code == 2);
    CHECK(run({"prompt-search", "--initial", initial.string(), "--eval-cmd", eval, "--llm-cmd", llm, "--iterations",
               "0"})
              .code == 2);
  }

  TEST_CASE("the built binary reports the same exit codes") {
    ct::TempDir dir;
    const auto log = dir / "log.txt";
    CHECK(shell("bucketize --list", log) == 0);
    CHECK(count_lines(ct::read_file(log)) == 27);
    CHECK(shell("schedule --world-size 0 --seed 1", log) == 2);
    CHECK(has(ct::read_file(log), "world-size"));
    CHECK(shell("frobnicate", log) == 2);
    CHECK(shell("stats --input " + (dir / "none.jsonl").string(), log) == 1);
  }
}
