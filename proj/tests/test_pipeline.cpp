#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <map>

#include "json.hpp"

#include "arf/benchmark/layout.hpp"
#include "arf/core/io.hpp"
#include "arf/question.hpp"
#include "fixtures.hpp"

using namespace arf;
namespace fs = std::filesystem;

namespace {

const char* kConfig = R"({
  "seed": 5,
  "total_questions": 750,
  "synth": {"length_pieces": [[240, 600, 0.6], [601, 1500, 0.4]], "variates": [1, 6]}
})";

std::string bin() {
    const char* b = std::getenv("ARF_FORGE_BIN");
    return b ? b : "arf-forge";
}

// Runs the CLI and returns its exit status; output goes to `log`.
int forge(const std::string& args, const fs::path& log) {
    const std::string cmd = bin() + " " + args + " >" + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p)); }

std::vector<Question> questions_in(const fs::path& root) {
    return questions_from_jsonl(io::read_file(layout::questions_path(root)));
}

class Pipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        work_ = new fixtures::TempDir("pipeline");
        fs::create_directories(work_->path());
        io::write_file(config(), kConfig);
    }
    static void TearDownTestSuite() { delete work_; }
    static fs::path dir(const std::string& rel) { return work_->path() / rel; }
    static fs::path config() { return dir("config.json"); }
    static fs::path log() { return dir("log.txt"); }
    static std::string output() { return io::read_file(log()); }

    static fixtures::TempDir* work_;
};

fixtures::TempDir* Pipeline::work_ = nullptr;

}  // namespace

TEST_F(Pipeline, GenerateIsReproducible) {
    const auto a = dir("gen-a"), b = dir("gen-b");
    ASSERT_EQ(forge("generate --config " + q(config()) + " --out " + q(a) + " --created-at 2026-01-01T00:00:00Z", log()), 0)
        << output();
    ASSERT_EQ(forge("generate --config " + q(config()) + " --out " + q(b) + " --created-at 2026-01-01T00:00:00Z", log()), 0)
        << output();
    EXPECT_EQ(io::read_file(layout::questions_path(a)), io::read_file(layout::questions_path(b)));
    EXPECT_EQ(fixtures::read_tree(a), fixtures::read_tree(b));
    const auto qs = questions_in(a);
    EXPECT_EQ(qs.size(), 750u);
    std::map<Category, int> per;
    for (const auto& x : qs) ++per[x.category];
    for (auto c : kAllCategories) EXPECT_NEAR(per[c], 750 / 8, 1) << to_string(c);
    const auto m = read_json(layout::manifest_path(a));
    EXPECT_EQ(m["created_at"], "2026-01-01T00:00:00Z");

    const auto c = dir("gen-c");
    ASSERT_EQ(forge("generate --config " + q(config()) + " --seed 6 --out " + q(c) + " --created-at 2026-01-01T00:00:00Z", log()), 0);
    EXPECT_NE(io::read_file(layout::questions_path(a)), io::read_file(layout::questions_path(c)));
}

TEST_F(Pipeline, GenerateRefusesUnusableOutputDirectories) {
    const auto busy = dir("busy");
    fs::create_directories(busy);
    io::write_file(busy / "keep.txt", "x");
    EXPECT_NE(forge("generate --questions 16 --out " + q(busy), log()), 0);
    EXPECT_EQ(fixtures::read_tree(busy).size(), 1u);

    const auto file = dir("plain-file");
    io::write_file(file, "x");
    EXPECT_NE(forge("generate --questions 16 --out " + q(file / "bench"), log()), 0);
    EXPECT_FALSE(fs::exists(file / "bench" / "manifest.json"));

    const auto bad = dir("bad-config.json");
    io::write_file(bad, R"({"seed": 1, "total_questoins": 10})");
    EXPECT_EQ(forge("generate --config " + q(bad) + " --out " + q(dir("never")), log()), 1);
    EXPECT_FALSE(fs::exists(dir("never") / "manifest.json"));
    EXPECT_EQ(forge("generate --bogus-flag", log()), 1);
}

TEST_F(Pipeline, EndToEndWithBaselines) {
    const auto bench = dir("e2e");
    ASSERT_EQ(forge("generate --config " + q(config()) + " --out " + q(bench), log()), 0) << output();
    const auto qs = questions_in(bench);

    for (const auto* m : {"baseline:random", "baseline:oracle", "baseline:frequent", "baseline:zscore"})
        ASSERT_EQ(forge("eval --benchmark " + q(bench) + " --model " + m + " --seed 3", log()), 0) << m << output();
    const auto results = bench / "results";
    for (const auto* f : {"baseline_random.jsonl", "baseline_oracle.jsonl", "baseline_frequent.jsonl", "baseline_zscore.jsonl"}) {
        EXPECT_TRUE(fs::exists(results / f)) << f;
        EXPECT_TRUE(fs::exists(results / (std::string(f) + ".meta.json"))) << f;
    }

    ASSERT_EQ(forge("score --benchmark " + q(bench) + " --results " + q(results / "baseline_oracle.jsonl"), log()), 0)
        << output();
    const auto oracle = read_json(results / "baseline_oracle.jsonl.score.json");
    EXPECT_EQ(oracle["accuracy"]["overall"], 1.0);
    EXPECT_EQ(oracle["macro_f1"]["overall"], 1.0);
    EXPECT_EQ(oracle["model"], "baseline:oracle");

    ASSERT_EQ(forge("score --benchmark " + q(bench) + " --results " + q(results / "baseline_random.jsonl"), log()), 0);
    const auto random = read_json(results / "baseline_random.jsonl.score.json");
    double expected = 0.0;
    for (const auto& x : qs) expected += 1.0 / static_cast<double>(x.options.size());
    expected /= static_cast<double>(qs.size());
    EXPECT_NEAR(random["accuracy"]["overall"].get<double>(), expected, 0.04);

    // Best-of-2 with the oracle on either side is the oracle.
    const auto best = dir("best.json");
    ASSERT_EQ(forge("score --benchmark " + q(bench) + " --best-of-2 " + q(results / "baseline_oracle.jsonl") + " " +
                        q(results / "baseline_random.jsonl") + " --out " + q(best),
                    log()),
              0)
        << output();
    const auto b = read_json(best);
    EXPECT_EQ(b["accuracy"]["overall"], 1.0);
    EXPECT_EQ(b["macro_f1"]["overall"], 1.0);
    EXPECT_EQ(b["accuracy"], oracle["accuracy"]);

    const auto cmp = dir("compare.json");
    ASSERT_EQ(forge("score --benchmark " + q(bench) + " --compare " + q(results / "baseline_random.jsonl") + " " +
                        q(results / "baseline_frequent.jsonl") + " " + q(results / "baseline_zscore.jsonl") + " --out " +
                        q(cmp),
                    log()),
              0)
        << output();
    EXPECT_EQ(read_json(cmp).size(), 3u);

    const auto md = dir("report.md");
    ASSERT_EQ(forge("report " + q(results / "baseline_oracle.jsonl.score.json") + " " + q(cmp) + " --out " + q(md), log()), 0)
        << output();
    const auto text = io::read_file(md);
    for (const auto* m : {"baseline:oracle", "baseline:random", "baseline:frequent", "baseline:zscore"})
        EXPECT_NE(text.find(m), std::string::npos) << m;
    EXPECT_NE(text.find("|"), std::string::npos);

    // Re-running eval reuses every record.
    ASSERT_EQ(forge("eval --benchmark " + q(bench) + " --model baseline:random --seed 3", log()), 0);
    EXPECT_NE(output().find("750 reused"), std::string::npos) << output();
}

TEST_F(Pipeline, RenderWritesOneOrThreeImagesPerQuestion) {
    const auto bench = dir("render");
    ASSERT_EQ(forge("generate --config " + q(config()) + " --questions 40 --out " + q(bench), log()), 0) << output();
    ASSERT_EQ(forge("render --benchmark " + q(bench) + " --concurrency 2", log()), 0) << output();
    const auto qs = questions_in(bench);
    std::size_t expected = 0;
    for (const auto& x : qs) {
        const std::size_t n = x.tier == Tier::III ? 3 : 1;
        expected += n;
        for (std::size_t k = 0; k < n; ++k) EXPECT_TRUE(fs::exists(layout::image_path(bench, x.question_id, k))) << x.question_id;
        EXPECT_FALSE(fs::exists(layout::image_path(bench, x.question_id, n))) << x.question_id;
    }
    EXPECT_NE(output().find("rendered " + std::to_string(expected) + " images (" + std::to_string(expected) + " written)"),
              std::string::npos)
        << output();
    ASSERT_EQ(forge("render --benchmark " + q(bench), log()), 0);
    EXPECT_NE(output().find("(0 written)"), std::string::npos) << output();
}

TEST_F(Pipeline, ExitCodes) {
    const auto bench = dir("codes");
    ASSERT_EQ(forge("generate --config " + q(config()) + " --questions 24 --out " + q(bench), log()), 0) << output();
    EXPECT_EQ(forge("eval --benchmark " + q(bench) + " --model baseline:nope", log()), 1);
    EXPECT_NE(output().find("error:"), std::string::npos);
    EXPECT_EQ(forge("eval --benchmark " + q(bench) + " --model some-model", log()), 1);
    EXPECT_EQ(forge("eval --benchmark " + q(bench) + " --model baseline:random --mode telepathy", log()), 1);
    EXPECT_EQ(forge("score --benchmark " + q(bench), log()), 1);

    // Tampered questions file.
    auto text = io::read_file(layout::questions_path(bench));
    text.insert(text.size() / 2, " ");
    io::write_file(layout::questions_path(bench), text);
    EXPECT_EQ(forge("eval --benchmark " + q(bench) + " --model baseline:random", log()), 2);
    EXPECT_EQ(forge("render --benchmark " + q(bench), log()), 2);
}
