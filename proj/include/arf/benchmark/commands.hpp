#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "arf/baselines/clients.hpp"
#include "arf/benchmark/layout.hpp"
#include "arf/benchmark/manifest.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/eval/client.hpp"
#include "arf/eval/prompt.hpp"
#include "arf/eval/records.hpp"
#include "arf/metrics.hpp"
#include "arf/question.hpp"
#include "arf/render/plot.hpp"
#include "arf/render/png.hpp"

namespace arf {

namespace fs = io::fs;

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// stops further work and is rethrown.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, n));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr err;
    std::mutex err_m;
    auto work = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= n || stop.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_m);
                if (!err) err = std::current_exception();
                stop = true;
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

// Render -------------------------------------------------------------------------

struct RenderSummary {
    std::size_t images = 0;
    std::size_t written = 0;  // files created or changed
};

inline std::vector<std::vector<std::uint8_t>> render_question(const Question& q, layout::SeriesCache& series,
                                                              const render::PlotSpec& base = {}) {
    render::PlotSpec spec = base;
    spec.category = q.category;
    std::vector<std::vector<std::uint8_t>> out;
    if (q.tier == Tier::III) {
        if (q.series_refs.size() != 2) throw RenderError("Tier III question " + q.question_id + " needs two series");
        auto a = series.get(q.series_refs[0]);
        auto b = series.get(q.series_refs[1]);
        for (auto& img : render::render_paired(*a, *b, spec)) out.push_back(std::move(img));
    } else {
        out.push_back(render::render_single(*series.get(q.series_refs.at(0)), spec));
    }
    return out;
}

// Renders every question's images. Files whose bytes are unchanged are left
// alone, so a second run writes nothing.
inline RenderSummary render_benchmark(const fs::path& root, std::size_t concurrency = 1) {
    const auto manifest = load_manifest(root);
    const auto questions = verify_benchmark(root, manifest);
    layout::SeriesCache series(root);
    std::vector<std::vector<std::vector<std::uint8_t>>> images(questions.size());
    std::atomic<std::size_t> written{0};
    parallel_for(questions.size(), concurrency, [&](std::size_t i) {
        images[i] = render_question(questions[i], series);
        for (std::size_t k = 0; k < images[i].size(); ++k) {
            const auto path = layout::image_path(root, questions[i].question_id, k);
            const std::string_view bytes(reinterpret_cast<const char*>(images[i][k].data()), images[i][k].size());
            std::error_code ec;
            if (fs::exists(path, ec) && io::read_file(path) == bytes) continue;
            io::write_file(path, bytes);
            ++written;
        }
    });
    RenderSummary s;
    nlohmann::ordered_json index;
    index["renderer"] = render::kRendererVersion;
    index["dpi"] = render::PlotSpec{}.dpi;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < questions.size(); ++i)
        for (std::size_t k = 0; k < images[i].size(); ++k) {
            const auto info = render::read_png_info(images[i][k]);
            nlohmann::ordered_json e;
            e["question_id"] = questions[i].question_id;
            e["path"] = layout::image_rel(questions[i].question_id, k);
            e["sha256"] = io::sha256_hex(std::span<const std::uint8_t>(images[i][k]));
            e["width"] = info.width;
            e["height"] = info.height;
            list.push_back(e);
            ++s.images;
        }
    index["images"] = list;
    const auto index_path = root / layout::kImagesDir / "index.json";
    const auto text = index.dump(1) + "\n";
    std::error_code ec;
    if (!fs::exists(index_path, ec) || io::read_file(index_path) != text) io::write_file(index_path, text);
    s.written = written;
    return s;
}

// Eval ---------------------------------------------------------------------------

struct RunConfig {
    std::string model;  // endpoint model name or baseline:*
    std::string endpoint;
    eval::Mode mode = eval::Mode::Vision;
    std::uint64_t seed = 0;
    std::size_t concurrency = 4;
    double rate_per_second = 0.0;
    std::size_t context_budget_tokens = 120'000;
    std::string few_shot_path;
    std::string api_key_env = "ARF_API_KEY";
    double temperature = 0.05;
    int max_tokens = 2000;
    int timeout_seconds = 120;
    eval::RetryPolicy retry{};
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    try {
        for (const auto& [k, _] : j.items()) {
            static const std::set<std::string> allowed{"model",       "endpoint",           "mode",
                                                       "seed",        "concurrency",        "rate_per_second",
                                                       "context_budget_tokens", "few_shot_path", "api_key_env",
                                                       "temperature", "max_tokens",         "timeout_seconds",
                                                       "max_retries"};
            if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in run config");
        }
        RunConfig c;
        c.model = j.value("model", c.model);
        c.endpoint = j.value("endpoint", c.endpoint);
        if (j.contains("mode")) c.mode = eval::mode_from_string(j["mode"].get<std::string>());
        c.seed = j.value("seed", c.seed);
        c.concurrency = j.value("concurrency", c.concurrency);
        c.rate_per_second = j.value("rate_per_second", c.rate_per_second);
        c.context_budget_tokens = j.value("context_budget_tokens", c.context_budget_tokens);
        c.few_shot_path = j.value("few_shot_path", c.few_shot_path);
        c.api_key_env = j.value("api_key_env", c.api_key_env);
        c.temperature = j.value("temperature", c.temperature);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
        c.retry.max_retries = j.value("max_retries", c.retry.max_retries);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
}

struct EvalSummary {
    std::size_t total = 0;
    std::size_t reused = 0;
    std::size_t issued = 0;
    std::size_t unanswered = 0;
    std::size_t invalid = 0;
};

inline fs::path meta_path(const fs::path& results) {
    fs::path p = results;
    p += ".meta.json";
    return p;
}

inline std::unique_ptr<eval::ModelClient> make_client(const RunConfig& cfg, const fs::path& root,
                                                      const std::vector<Question>& questions) {
    if (cfg.model.empty()) throw ConfigError("no model configured");
    if (baselines::is_baseline_name(cfg.model)) return baselines::make_baseline(cfg.model, root, questions, cfg.seed);
    if (cfg.endpoint.empty())
        throw ConfigError("model '" + cfg.model + "' is not a baseline and no endpoint is configured");
    eval::ClientSettings s;
    s.endpoint = cfg.endpoint;
    s.model = cfg.model;
    s.api_key_env = cfg.api_key_env;
    s.temperature = cfg.temperature;
    s.max_tokens = cfg.max_tokens;
    s.timeout_seconds = cfg.timeout_seconds;
    return std::make_unique<eval::HttpChatClient>(s);
}

// Evaluates every question not already answered in `results`. Records are
// appended as they complete, then the file is rewritten in benchmark order.
inline EvalSummary run_eval(const fs::path& root, const RunConfig& cfg, const fs::path& results,
                            const eval::Sleeper& sleep = eval::real_sleep) {
    const auto manifest = load_manifest(root);
    const auto questions = verify_benchmark(root, manifest);
    auto client = make_client(cfg, root, questions);
    const bool baseline = baselines::is_baseline_name(cfg.model);
    std::string few_shot;
    if (!cfg.few_shot_path.empty()) few_shot = io::read_file(cfg.few_shot_path);

    std::map<std::string, eval::EvalRecord> done;
    std::error_code ec;
    if (fs::exists(results, ec)) {
        std::map<std::string, const Question*> by_id;
        for (const auto& q : questions) by_id[q.question_id] = &q;
        for (auto& r : eval::load_records(results)) {
            auto it = by_id.find(r.question_id);
            if (it == by_id.end() || r.unanswered) continue;
            if (r.permutation != eval::shuffle_options(*it->second, cfg.seed)) continue;
            done[r.question_id] = std::move(r);
        }
    }

    EvalSummary sum;
    sum.total = questions.size();
    sum.reused = done.size();
    std::vector<const Question*> pending;
    for (const auto& q : questions)
        if (!done.count(q.question_id)) pending.push_back(&q);
    sum.issued = pending.size();

    if (results.has_parent_path()) fs::create_directories(results.parent_path(), ec);
    std::mutex out_m;
    std::vector<eval::EvalRecord> fresh(pending.size());
    {
        std::ofstream append(results, std::ios::app | std::ios::binary);
        if (!append) throw FilesystemError("cannot open results file " + results.string());
        layout::SeriesCache series(root);
        eval::ConcurrencyLimiter cap(cfg.concurrency);
        eval::RateLimiter rate(cfg.rate_per_second, std::max(1.0, cfg.rate_per_second));
        parallel_for(pending.size(), cfg.concurrency, [&](std::size_t i) {
            const Question& q = *pending[i];
            const auto perm = eval::shuffle_options(q, cfg.seed);
            eval::PromptPayload payload;
            if (baseline) {
                // In-process baselines read the question directly.
                payload.question = &q;
                payload.permutation = perm;
                for (auto k : perm) payload.presented_options.push_back(q.options[k]);
            } else if (cfg.mode == eval::Mode::Vision) {
                std::vector<std::vector<std::uint8_t>> images;
                const std::size_t n = q.tier == Tier::III ? 3 : 1;
                for (std::size_t k = 0; k < n; ++k) {
                    const auto path = layout::image_path(root, q.question_id, k);
                    if (!fs::exists(path)) throw HarnessError("missing image " + path.string() + "; run render first");
                    const auto bytes = io::read_file(path);
                    images.emplace_back(bytes.begin(), bytes.end());
                }
                payload = eval::build_prompt(q, cfg.mode, perm, std::move(images), {}, few_shot);
            } else {
                std::vector<std::string> texts;
                const auto budget = cfg.context_budget_tokens / q.series_refs.size();
                for (std::size_t k = 0; k < q.series_refs.size(); ++k) {
                    const auto label = q.series_refs.size() == 1 ? std::string{} : "Time-series " + std::to_string(k + 1);
                    texts.push_back(eval::serialize_series_text(*series.get(q.series_refs[k]), budget, label).text);
                }
                payload = eval::build_prompt(q, cfg.mode, perm, {}, texts, few_shot);
            }
            auto res = eval::call_model(*client, payload, cfg.retry, sleep, &cap, &rate);
            eval::EvalRecord r;
            if (res.completion && !res.completion->text.empty()) {
                r = eval::parse_answer(res.completion->text, q, perm);
                r.prompt_tokens = res.completion->prompt_tokens;
                r.completion_tokens = res.completion->completion_tokens;
            } else {
                r = eval::unanswered_record(q, perm, res.error.empty() ? "empty completion" : res.error);
            }
            r.latency_ms = res.latency_ms;
            r.retries = res.retries;
            std::lock_guard lock(out_m);
            append << eval::to_jsonl_line(r) << '\n';
            append.flush();
            fresh[i] = std::move(r);
        });
    }
    for (auto& r : fresh) done[r.question_id] = std::move(r);

    std::string text;
    for (const auto& q : questions) {
        const auto& r = done.at(q.question_id);
        sum.unanswered += r.unanswered;
        sum.invalid += r.invalid;
        text += eval::to_jsonl_line(r);
        text += '\n';
    }
    io::write_file(results, text);

    nlohmann::ordered_json meta;
    meta["model"] = cfg.model;
    meta["mode"] = eval::to_string(cfg.mode);
    meta["seed"] = cfg.seed;
    meta["benchmark_config_hash"] = manifest.config_hash;
    meta["questions_sha256"] = manifest.questions.sha256;
    meta["n_records"] = questions.size();
    meta["n_unanswered"] = sum.unanswered;
    meta["n_invalid"] = sum.invalid;
    if (!baseline) {
        meta["endpoint"] = cfg.endpoint;
        meta["temperature"] = cfg.temperature;
        meta["max_tokens"] = cfg.max_tokens;
    }
    io::write_file(meta_path(results), meta.dump(2) + "\n");
    return sum;
}

// Score --------------------------------------------------------------------------

inline std::string model_name_for(const fs::path& results) {
    std::error_code ec;
    if (fs::exists(meta_path(results), ec)) {
        auto j = nlohmann::json::parse(io::read_file(meta_path(results)), nullptr, false);
        if (!j.is_discarded() && j.contains("model") && j["model"].is_string()) return j["model"].get<std::string>();
    }
    return results.stem().string();
}

inline std::vector<Question> load_scoring_benchmark(const fs::path& root) {
    const auto m = load_manifest(root);
    verify_entry(root, m.questions);
    return questions_from_jsonl(io::read_file(root / m.questions.path));
}

inline metrics::ScoreReport score_results(const fs::path& root, const fs::path& results,
                                          const metrics::ScoreOptions& opt = {}) {
    const auto questions = load_scoring_benchmark(root);
    return metrics::score(eval::load_records(results), questions, model_name_for(results), opt);
}

inline metrics::ScoreReport score_best_of_2(const fs::path& root, const fs::path& a, const fs::path& b,
                                            const metrics::ScoreOptions& opt = {}) {
    const auto questions = load_scoring_benchmark(root);
    return metrics::model_expert_oracle(eval::load_records(a), eval::load_records(b), questions,
                                        "best-of-2(" + model_name_for(a) + ", " + model_name_for(b) + ")", opt);
}

inline metrics::ScoreReport load_report(const fs::path& path) {
    auto j = nlohmann::json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw SchemaError("score report is not valid JSON: " + path.string());
    return metrics::report_from_json(j);
}

}  // namespace arf
