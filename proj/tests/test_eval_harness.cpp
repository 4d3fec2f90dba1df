#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "httplib.h"

#include "arf/benchmark/commands.hpp"
#include "arf/benchmark/generate.hpp"
#include "arf/benchmark/layout.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/eval/client.hpp"
#include "arf/eval/prompt.hpp"
#include "arf/eval/prompt_text.hpp"
#include "arf/eval/records.hpp"
#include "fixtures.hpp"

using namespace arf;
using namespace arf::eval;

namespace {

constexpr UnixSeconds kCreatedAt = 1'767'225'600;

Question presence_question() {
    Question q;
    q.question_id = "q00001";
    q.category = Category::Presence;
    q.tier = Tier::I;
    q.text = std::string(question_template(Category::Presence));
    q.captions = {"Average request latency, grouped by pod and region."};
    q.series_refs = {"s00000"};
    q.series_paths = {"series/s00000.csv"};
    q.options = {"Yes", "No"};
    q.correct_index = 0;
    q.semantic_class_of_option = bin_all(q.category, q.options);
    return q;
}

Question correlation_question() {
    Question q;
    q.question_id = "q00002";
    q.category = Category::Correlation;
    q.tier = Tier::III;
    q.text = std::string(question_template(Category::Correlation));
    q.captions = {"caption one", "caption two"};
    q.series_refs = {"s00000", "s00001"};
    q.series_paths = {"series/s00000.csv", "series/s00001.csv"};
    for (auto o : opt::kCorrelation) q.options.emplace_back(o);
    q.correct_index = opt::kCorrYes;
    q.semantic_class_of_option = bin_all(q.category, q.options);
    return q;
}

Question magnitude_question() {
    Question q;
    q.question_id = "q00003";
    q.category = Category::Magnitude;
    q.tier = Tier::II;
    q.text = std::string(question_template(Category::Magnitude));
    q.captions = {"c"};
    q.series_refs = {"s00000"};
    q.options = {"1", "5", "25", "125", "No Anomaly"};
    q.correct_index = 2;
    q.semantic_class_of_option = bin_all(q.category, q.options);
    return q;
}

TimeSeries ramp(std::size_t T, std::size_t V) {
    TimeSeries s;
    s.series_id = "s00000";
    s.start_time = 1'740'787'200;
    s.step = 60;
    s.length = T;
    s.channels = V;
    for (std::size_t c = 0; c < V; ++c) s.channel_names.push_back("pod:" + std::to_string(c + 1));
    s.values.resize(T * V);
    for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = 1000.0 + static_cast<double>(i % 977) * 0.125;
    return s;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST(Shuffle, TwoOptionsGiveIdentityOrSwap) {
    std::set<Permutation> seen;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = shuffle_options(2, s);
        EXPECT_TRUE(p == Permutation({0, 1}) || p == Permutation({1, 0}));
        seen.insert(p);
    }
    EXPECT_EQ(seen.size(), 2u);
}

TEST(Shuffle, FiveOptionPermutationsAreUniform) {
    constexpr int kDraws = 120'000;
    std::map<Permutation, int> counts;
    for (int i = 0; i < kDraws; ++i) ++counts[shuffle_options(5, derive_seed(77, "perm", i))];
    ASSERT_EQ(counts.size(), 120u);
    const double e = kDraws / 120.0;
    const double sd = std::sqrt(e * (1.0 - 1.0 / 120.0));
    double chi2 = 0.0;
    for (const auto& [p, c] : counts) {
        EXPECT_LE(std::fabs(c - e), 3.0 * sd);
        chi2 += (c - e) * (c - e) / e;
    }
    EXPECT_LT(chi2, 173.6);  // df 119, p = 0.001
}

TEST(Shuffle, SeedAndQuestionDetermineThePermutation) {
    auto q = correlation_question();
    EXPECT_EQ(shuffle_options(q, 5), shuffle_options(q, 5));
    int differ = 0;
    for (std::uint64_t s = 0; s < 20; ++s) differ += shuffle_options(q, s) != shuffle_options(q, s + 100);
    EXPECT_GT(differ, 10);
    const auto p = shuffle_options(q, 9);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(to_presented(p, to_canonical(p, i)), i);
}

TEST(Prompt, PresenceListsTwoOptionsInPresentedOrder) {
    const auto q = presence_question();
    const Permutation swap{1, 0};
    const auto p = build_prompt(q, Mode::Vision, swap, {{1, 2, 3}});
    EXPECT_EQ(p.system, std::string(kSystemPrompt));
    EXPECT_NE(p.user.find("A. No\nB. Yes\n"), std::string::npos);
    EXPECT_EQ(count(p.user, "\nC. "), 0u);
    EXPECT_NE(p.user.find(q.text), std::string::npos);
    EXPECT_NE(p.user.find(q.captions[0]), std::string::npos);
    EXPECT_EQ(p.images.size(), 1u);
    EXPECT_EQ(p.presented_options, (std::vector<std::string>{"No", "Yes"}));
}

TEST(Prompt, TierThreeVisionNeedsThreeImages) {
    const auto q = correlation_question();
    const auto perm = shuffle_options(q, 1);
    const auto p = build_prompt(q, Mode::Vision, perm, {{1}, {2}, {3}});
    EXPECT_EQ(p.images.size(), 3u);
    EXPECT_NE(p.user.find("Time-series 1 description: caption one"), std::string::npos);
    EXPECT_NE(p.user.find("Time-series 2 description: caption two"), std::string::npos);
    EXPECT_THROW(build_prompt(q, Mode::Vision, perm, {{1}}), HarnessError);
    EXPECT_THROW(build_prompt(presence_question(), Mode::Vision, {0, 1}, {}), HarnessError);
    EXPECT_THROW(build_prompt(q, Mode::Vision, {0, 1}, {{1}, {2}, {3}}), HarnessError);
}

TEST(Prompt, TextModeCarriesTheTableAndNoImages) {
    const auto q = presence_question();
    const auto s = ramp(300, 2);
    const auto text = serialize_series_text(s, 100'000).text;
    const auto p = build_prompt(q, Mode::Text, {0, 1}, {}, {text});
    EXPECT_TRUE(p.images.empty());
    EXPECT_NE(p.user.find("timestamp,pod:1,pod:2\n"), std::string::npos);
    EXPECT_NE(p.user.find("2025-03-01T00:00:00Z,"), std::string::npos);
    EXPECT_THROW(build_prompt(q, Mode::Text, {0, 1}, {}, {}), HarnessError);
}

TEST(Prompt, FewShotBlockIsAppendedToTheSystemPrompt) {
    const auto p = build_prompt(presence_question(), Mode::Vision, {0, 1}, {{1}}, {}, "Example: ...");
    EXPECT_EQ(p.system.rfind(std::string(kSystemPrompt), 0), 0u);
    EXPECT_NE(p.system.find("Example: ..."), std::string::npos);
}

TEST(Prompt, SystemPromptDescribesTheAnswerFormat) {
    const std::string sys(kSystemPrompt);
    EXPECT_NE(sys.find("## Answer Format"), std::string::npos);
    EXPECT_NE(sys.find("\"answer\""), std::string::npos);
}

TEST(Serialize, SmallSeriesIsVerbatim) {
    const auto s = ramp(240, 3);
    const auto r = serialize_series_text(s, 1'000'000);
    EXPECT_EQ(r.rows, 240u);
    EXPECT_EQ(r.stride, 1u);
    EXPECT_EQ(r.truncated_fraction, 0.0);
    EXPECT_EQ(count(r.text, "\n2025-"), 240u);
    EXPECT_EQ(count(r.text, std::string(kElisionPrefix)), 0u);
    EXPECT_LE(estimate_tokens(r.text), 1'000'000u);
}

TEST(Serialize, LongSeriesIsStridedFirst) {
    const auto s = ramp(5000, 2);
    const auto full = serialize_series_text(s, 10'000'000);
    const auto r = serialize_series_text(s, estimate_tokens(full.text) * 6 / 10);
    EXPECT_EQ(r.stride, 2u);
    EXPECT_EQ(r.rows, 2500u);
    EXPECT_EQ(r.truncated_fraction, 0.0);
    EXPECT_LE(estimate_tokens(r.text), estimate_tokens(full.text) * 6 / 10);
}

TEST(Serialize, MiddleTruncationSteps) {
    const std::size_t T = 600;
    const auto s = ramp(T, 4);
    const auto full_tokens = estimate_tokens(serialize_series_text(s, 10'000'000).text);
    double last = 0.0;
    bool saw_forty = false;
    for (std::size_t k = 100; k >= 20; --k) {
        const std::size_t budget = full_tokens * k / 100;
        SerializedSeries r;
        try {
            r = serialize_series_text(s, budget);
        } catch (const SerializationError&) {
            EXPECT_GT(last, 0.5);
            break;
        }
        EXPECT_LE(estimate_tokens(r.text), budget);
        EXPECT_GE(r.truncated_fraction, last);
        last = r.truncated_fraction;
        if (r.truncated_fraction == 0.40) {
            saw_forty = true;
            EXPECT_EQ(r.rows, static_cast<std::size_t>(std::ceil(0.6 * T)));
            EXPECT_EQ(count(r.text, std::string(kElisionPrefix)), 1u);
            EXPECT_NE(r.text.find("240 rows elided"), std::string::npos);
            EXPECT_EQ(count(r.text, "\n2025-"), r.rows);
            // Head and tail of the series survive.
            EXPECT_NE(r.text.find(format_rfc3339(s.time_at(0))), std::string::npos);
            EXPECT_NE(r.text.find(format_rfc3339(s.time_at(T - 1))), std::string::npos);
            EXPECT_EQ(r.text.find(format_rfc3339(s.time_at(T / 2))), std::string::npos);
        }
    }
    EXPECT_TRUE(saw_forty);
}

TEST(Serialize, HopelessBudgetIsAnError) {
    EXPECT_THROW(serialize_series_text(ramp(600, 4), 10), SerializationError);
    EXPECT_THROW(serialize_series_text(ramp(600, 4), 0), SerializationError);
}

namespace {

class ScriptedClient : public ModelClient {
public:
    explicit ScriptedClient(std::vector<std::function<Completion()>> steps) : steps_(std::move(steps)) {}
    Completion complete(const PromptPayload&) override { return steps_.at(std::min(calls++, steps_.size() - 1))(); }
    std::string name() const override { return "scripted"; }
    std::size_t calls = 0;

private:
    std::vector<std::function<Completion()>> steps_;
};

std::function<Completion()> answer(std::string text) {
    return [text] { return Completion{text, 10, 5}; };
}
std::function<Completion()> transient() {
    return []() -> Completion { throw CallFailure("HTTP 503", true); };
}

}  // namespace

TEST(CallModel, EchoSucceedsWithoutRetries) {
    ScriptedClient c({answer("{\"answer\": \"Yes\"}")});
    std::vector<double> slept;
    const auto r = call_model(c, {}, {}, [&](double s) { slept.push_back(s); });
    ASSERT_TRUE(r.completion);
    EXPECT_EQ(r.completion->text, "{\"answer\": \"Yes\"}");
    EXPECT_EQ(r.retries, 0);
    EXPECT_TRUE(slept.empty());
}

TEST(CallModel, TransientFailuresAreRetriedWithBackoff) {
    ScriptedClient c({transient(), transient(), answer("ok")});
    std::vector<double> slept;
    const auto r = call_model(c, {}, {}, [&](double s) { slept.push_back(s); });
    ASSERT_TRUE(r.completion);
    EXPECT_EQ(r.retries, 2);
    EXPECT_EQ(slept, (std::vector<double>{1.0, 2.0}));
    EXPECT_TRUE(r.error.empty());
}

TEST(CallModel, ExhaustedRetriesLeaveTheQuestionUnanswered) {
    ScriptedClient c({transient()});
    RetryPolicy policy;
    policy.max_retries = 3;
    std::vector<double> slept;
    const auto r = call_model(c, {}, policy, [&](double s) { slept.push_back(s); });
    EXPECT_FALSE(r.completion);
    EXPECT_EQ(c.calls, 4u);
    EXPECT_EQ(r.retries, 3);
    EXPECT_NE(r.error.find("503"), std::string::npos);
    const auto rec = unanswered_record(presence_question(), {0, 1}, r.error);
    EXPECT_TRUE(rec.unanswered);
    EXPECT_FALSE(rec.answered_validly());
}

TEST(CallModel, PermanentFailuresAreNotRetried) {
    ScriptedClient c({[]() -> Completion { throw CallFailure("HTTP 400", false); }});
    const auto r = call_model(c, {}, {}, [](double) {});
    EXPECT_FALSE(r.completion);
    EXPECT_EQ(c.calls, 1u);
    ScriptedClient bad({[]() -> Completion { throw IntegrityError("key mismatch"); }});
    EXPECT_THROW(call_model(bad, {}, {}, [](double) {}), IntegrityError);
}

TEST(ParseAnswer, PlainFencedAndInvalid) {
    const auto q = presence_question();
    const Permutation swap{1, 0};
    const auto plain = parse_answer(R"({"answer": "Yes", "reasoning": "spike"})", q, swap);
    ASSERT_TRUE(plain.answered_validly());
    EXPECT_EQ(*plain.presented_index, 1u);
    EXPECT_EQ(*plain.canonical_index, 0u);

    const auto fenced = parse_answer("Sure.\n```json\n{\"answer\": \"No\"}\n```\n", q, swap);
    ASSERT_TRUE(fenced.answered_validly());
    EXPECT_EQ(*fenced.canonical_index, 1u);

    const auto maybe = parse_answer(R"({"answer": "maybe"})", q, swap);
    EXPECT_TRUE(maybe.invalid);
    EXPECT_FALSE(maybe.answered_validly());
    EXPECT_EQ(*maybe.answer, "maybe");

    EXPECT_TRUE(parse_answer("Yes", q, swap).invalid);
    EXPECT_TRUE(parse_answer("", q, swap).invalid);
}

TEST(ParseAnswer, NormalizationAndNumbers) {
    const auto q = presence_question();
    EXPECT_EQ(*parse_answer(R"({"answer": "  yES "})", q, {0, 1}).canonical_index, 0u);
    const auto m = magnitude_question();
    EXPECT_EQ(*parse_answer(R"({"answer": 25})", m, {0, 1, 2, 3, 4}).canonical_index, 2u);
    EXPECT_EQ(*parse_answer(R"({"answer": "125"})", m, {4, 3, 2, 1, 0}).canonical_index, 3u);
}

TEST(Records, JsonlRoundTrip) {
    const auto q = presence_question();
    auto a = parse_answer(R"({"answer": "No"})", q, {1, 0});
    a.latency_ms = 12.5;
    a.retries = 1;
    a.prompt_tokens = 100;
    const auto b = unanswered_record(q, {0, 1}, "timeout");
    const auto c = parse_answer("garbage", q, {0, 1});
    const std::string text = to_jsonl_line(a) + "\n" + to_jsonl_line(b) + "\n" + to_jsonl_line(c) + "\n";
    const auto back = records_from_jsonl(text);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].canonical_index, a.canonical_index);
    EXPECT_EQ(back[0].permutation, a.permutation);
    EXPECT_EQ(back[0].latency_ms, 12.5);
    EXPECT_TRUE(back[1].unanswered);
    EXPECT_EQ(back[1].error, "timeout");
    EXPECT_TRUE(back[2].invalid);
    EXPECT_EQ(to_jsonl_line(back[0]) + "\n" + to_jsonl_line(back[1]) + "\n" + to_jsonl_line(back[2]) + "\n", text);
}

// Harness runs over a generated benchmark ------------------------------------------

namespace {

class Bench : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = new fixtures::TempDir("harness");
        generate_benchmark(fixtures::compact_config(21, 40), dir_->path(), kCreatedAt);
        questions_ = new std::vector<Question>(load_scoring_benchmark(dir_->path()));
    }
    static void TearDownTestSuite() {
        delete questions_;
        delete dir_;
    }
    static const fs::path& root() { return dir_->path(); }
    static const std::vector<Question>& questions() { return *questions_; }

    static fixtures::TempDir* dir_;
    static std::vector<Question>* questions_;
};

fixtures::TempDir* Bench::dir_ = nullptr;
std::vector<Question>* Bench::questions_ = nullptr;

std::vector<std::string> read_lines(const fs::path& p) {
    std::vector<std::string> out;
    for (auto& l : io::split_lines(io::read_file(p)))
        if (!l.empty()) out.emplace_back(l);
    return out;
}

RunConfig baseline(std::string name, std::uint64_t seed = 3) {
    RunConfig c;
    c.model = std::move(name);
    c.seed = seed;
    c.concurrency = 2;
    return c;
}

// Chat-completions stand-in that always answers option A.
class MockServer {
public:
    MockServer() {
        svr_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const auto& content = body["messages"][1]["content"];
            const std::string user = content[0]["text"];
            std::size_t images = 0;
            for (const auto& part : content)
                if (part["type"] == "image_url") ++images;
            {
                std::lock_guard lock(m_);
                ++requests_;
                const bool tier3 = user.find("Time-series 1 description:") != std::string::npos;
                image_counts_[tier3 ? 3 : 1].insert(images);
                if (fail_every_ && requests_ % fail_every_ == 0) {
                    res.status = 503;
                    return;
                }
            }
            const auto a = user.find("\nA. ") + 4;
            const auto option = user.substr(a, user.find('\n', a) - a);
            nlohmann::json reply = {{"choices", {{{"message", {{"content", nlohmann::json({{"answer", option}}).dump()}}}}}},
                                    {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}}};
            res.set_content(reply.dump(), "application/json");
        });
        port_ = svr_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { svr_.listen_after_bind(); });
        svr_.wait_until_ready();
    }
    ~MockServer() {
        svr_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    void fail_every(std::size_t n) { fail_every_ = n; }
    std::size_t requests() {
        std::lock_guard lock(m_);
        return requests_;
    }
    std::map<std::size_t, std::set<std::size_t>> image_counts() {
        std::lock_guard lock(m_);
        return image_counts_;
    }

private:
    httplib::Server svr_;
    std::thread thread_;
    int port_ = 0;
    std::mutex m_;
    std::size_t requests_ = 0;
    std::size_t fail_every_ = 0;
    std::map<std::size_t, std::set<std::size_t>> image_counts_;
};

RunConfig http_config(const MockServer& server, Mode mode) {
    RunConfig c;
    c.model = "mock-model";
    c.endpoint = server.endpoint();
    c.mode = mode;
    c.seed = 5;
    c.concurrency = 3;
    c.retry.max_retries = 0;
    return c;
}

}  // namespace

TEST_F(Bench, BaselinesNeverReadAnswerKeys) {
    for (const auto* name : {"baseline:random", "baseline:frequent", "baseline:zscore"}) {
        std::vector<fs::path> reads;
        std::mutex m;
        fixtures::TempDir out("iso");
        {
            io::ScopedReadObserver obs([&](const fs::path& p) {
                std::lock_guard lock(m);
                reads.push_back(p);
            });
            run_eval(root(), baseline(name), out / "r.jsonl");
        }
        EXPECT_FALSE(reads.empty());
        for (const auto& p : reads) EXPECT_FALSE(layout::is_key_path(fs::relative(p, root()))) << name << " read " << p;
    }
    // The oracle is the one client that does.
    std::vector<fs::path> reads;
    std::mutex m;
    fixtures::TempDir out("iso");
    {
        io::ScopedReadObserver obs([&](const fs::path& p) {
            std::lock_guard lock(m);
            reads.push_back(p);
        });
        run_eval(root(), baseline("baseline:oracle"), out / "r.jsonl");
    }
    EXPECT_TRUE(std::any_of(reads.begin(), reads.end(),
                            [&](const fs::path& p) { return layout::is_key_path(fs::relative(p, root())); }));
}

TEST_F(Bench, ResumeReusesAnsweredRecords) {
    fixtures::TempDir out("resume");
    const auto results = out / "random.jsonl";
    const auto first = run_eval(root(), baseline("baseline:random"), results);
    EXPECT_EQ(first.total, questions().size());
    EXPECT_EQ(first.issued, questions().size());
    const auto complete = io::read_file(results);
    const auto lines = read_lines(results);

    // Keep half the records, as if the run had been killed midway.
    std::string half;
    for (std::size_t i = 0; i < lines.size() / 2; ++i) half += lines[i] + "\n";
    io::write_file(results, half);
    const auto second = run_eval(root(), baseline("baseline:random"), results);
    EXPECT_EQ(second.reused, lines.size() / 2);
    EXPECT_EQ(second.issued, lines.size() - lines.size() / 2);
    EXPECT_EQ(io::read_file(results), complete);

    const auto third = run_eval(root(), baseline("baseline:random"), results);
    EXPECT_EQ(third.issued, 0u);
    EXPECT_EQ(io::read_file(results), complete);

    // A different seed keeps only records whose permutation happens to coincide.
    std::size_t same = 0;
    for (const auto& q : questions()) same += shuffle_options(q, 3) == shuffle_options(q, 4);
    ASSERT_LT(same, questions().size());
    const auto reseeded = run_eval(root(), baseline("baseline:random", 4), results);
    EXPECT_EQ(reseeded.reused, same);
    for (const auto& r : load_records(results))
        EXPECT_EQ(r.permutation, shuffle_options(*std::find_if(questions().begin(), questions().end(),
                                                               [&](const Question& q) { return q.question_id == r.question_id; }),
                                                 4));

    const auto meta = nlohmann::json::parse(io::read_file(meta_path(results)));
    EXPECT_EQ(meta["model"], "baseline:random");
    EXPECT_EQ(meta["n_records"], questions().size());
}

TEST_F(Bench, RecordsFollowBenchmarkOrder) {
    fixtures::TempDir out("order");
    run_eval(root(), baseline("baseline:oracle"), out / "o.jsonl");
    const auto recs = load_records(out / "o.jsonl");
    ASSERT_EQ(recs.size(), questions().size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(recs[i].question_id, questions()[i].question_id);
        EXPECT_EQ(recs[i].canonical_index, questions()[i].correct_index);
        EXPECT_EQ(recs[i].latency_ms, 0.0);
    }
}

TEST_F(Bench, UnknownModelsAreConfigErrors) {
    fixtures::TempDir out("cfg");
    EXPECT_THROW(run_eval(root(), baseline("baseline:psychic"), out / "x.jsonl"), ConfigError);
    EXPECT_THROW(run_eval(root(), baseline("gpt-unknown"), out / "x.jsonl"), ConfigError);
    EXPECT_THROW(run_eval(root(), baseline(""), out / "x.jsonl"), ConfigError);
    EXPECT_THROW(run_config_from_json({{"modle", "x"}}), ConfigError);
}

TEST_F(Bench, TextModeOverHttp) {
    MockServer server;
    fixtures::TempDir out("http");
    std::vector<fs::path> reads;
    std::mutex m;
    EvalSummary sum;
    {
        io::ScopedReadObserver obs([&](const fs::path& p) {
            std::lock_guard lock(m);
            reads.push_back(p);
        });
        sum = run_eval(root(), http_config(server, Mode::Text), out / "mock.jsonl");
    }
    for (const auto& p : reads) EXPECT_FALSE(layout::is_key_path(fs::relative(p, root()))) << p;
    EXPECT_EQ(sum.unanswered, 0u);
    EXPECT_EQ(sum.invalid, 0u);
    EXPECT_EQ(server.requests(), questions().size());
    const auto recs = load_records(out / "mock.jsonl");
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(*recs[i].presented_index, 0u);
        EXPECT_EQ(*recs[i].canonical_index, shuffle_options(questions()[i], 5)[0]);
        EXPECT_EQ(recs[i].prompt_tokens, 7);
    }
    const auto counts = server.image_counts();
    for (const auto& [tier, seen] : counts) EXPECT_EQ(seen, std::set<std::size_t>{0});
}

TEST_F(Bench, VisionModeNeedsRenderedImages) {
    MockServer server;
    fixtures::TempDir copy("vision");
    fs::copy(root(), copy.path(), fs::copy_options::recursive);
    fixtures::TempDir out("vision-out");
    EXPECT_THROW(run_eval(copy.path(), http_config(server, Mode::Vision), out / "v.jsonl"), HarnessError);

    render_benchmark(copy.path(), 1);
    const auto sum = run_eval(copy.path(), http_config(server, Mode::Vision), out / "v2.jsonl");
    EXPECT_EQ(sum.unanswered, 0u);
    const auto counts = server.image_counts();
    ASSERT_TRUE(counts.count(1));
    ASSERT_TRUE(counts.count(3));
    EXPECT_EQ(counts.at(1), std::set<std::size_t>{1});
    EXPECT_EQ(counts.at(3), std::set<std::size_t>{3});
}

TEST_F(Bench, UnansweredQuestionsAreRetriedOnResume) {
    MockServer server;
    server.fail_every(3);
    fixtures::TempDir out("flaky");
    const auto results = out / "flaky.jsonl";
    auto cfg = http_config(server, Mode::Text);
    cfg.concurrency = 1;
    const auto first = run_eval(root(), cfg, results, [](double) {});
    EXPECT_EQ(first.unanswered, questions().size() / 3);
    server.fail_every(0);
    const auto second = run_eval(root(), cfg, results, [](double) {});
    EXPECT_EQ(second.issued, first.unanswered);
    EXPECT_EQ(second.unanswered, 0u);
}
