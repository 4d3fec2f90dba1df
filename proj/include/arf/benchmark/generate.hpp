#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arf/anomaly.hpp"
#include "arf/baselines/oracle.hpp"
#include "arf/benchmark/config.hpp"
#include "arf/benchmark/layout.hpp"
#include "arf/benchmark/manifest.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/rng.hpp"
#include "arf/core/time.hpp"
#include "arf/qa_gen.hpp"
#include "arf/question.hpp"
#include "arf/series_synth.hpp"

namespace arf {

// Called once per generated series while its values are still in memory.
using SeriesSink = std::function<void(const TimeSeries& observed, const TimeSeries& counterfactual, const AnswerKey&)>;

struct GeneratedBenchmark {
    std::vector<Question> questions;  // final order, ids assigned
    std::vector<TimeSeries> series;   // metadata only: values are released after use
    std::vector<AnswerKey> keys;      // parallel to `series`
    std::vector<IncidentEvent> events;
};

namespace gen_detail {

inline std::string numbered(const char* prefix, std::size_t n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
    return buf;
}

inline bool is_single(Category c) { return c != Category::Correlation && c != Category::Indicator; }

// Lags relative to the first member.
inline std::vector<std::int64_t> sample_lags(std::size_t n, const AnomalyConfig& cfg, Rng& rng) {
    std::vector<std::int64_t> lags(n, 0);
    if (rng.bernoulli(cfg.p_zero_lag_event)) return lags;
    for (std::size_t i = 1; i < n; ++i) lags[i] = rng.uniform_int(-cfg.max_event_lag, cfg.max_event_lag);
    return lags;
}

struct Group {
    std::vector<TimeSeries> counterfactual;
    std::vector<std::vector<AnomalyRecord>> records;
    std::vector<IncidentEvent> events;
};

inline Group make_group(const BenchmarkConfig& cfg, std::size_t group_index, std::size_t first_series) {
    Rng rng(derive_seed(cfg.seed, "group", group_index));
    Group g;
    const auto size = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.min_group_size), static_cast<std::int64_t>(cfg.max_group_size)));
    const auto group_id = numbered("g", group_index, 4);
    for (std::size_t m = 0; m < size; ++m) {
        Rng srng(derive_seed(cfg.seed, "series", first_series + m));
        TimeSeries s = generate_series(cfg.synth, srng);
        s.series_id = numbered("s", first_series + m, 5);
        s.incident_group = group_id;
        if (m > 0) {
            // Members share the first member's clock so their ranges overlap.
            s.step = g.counterfactual[0].step;
            s.start_time = g.counterfactual[0].start_time + rng.uniform_int(0, 120) * s.step;
        }
        g.counterfactual.push_back(std::move(s));
    }
    g.records.resize(size);

    std::vector<bool> in_event(size, false);
    if (size >= 2 && rng.bernoulli(cfg.p_event)) {
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = i;
        rng.shuffle(idx);
        idx.resize(static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(size))));
        std::sort(idx.begin(), idx.end());
        std::vector<const TimeSeries*> members;
        bool seasonal_ok = true, flatline_ok = true;
        for (auto i : idx) {
            members.push_back(&g.counterfactual[i]);
            seasonal_ok = seasonal_ok && !detail::seasonal_channels(g.counterfactual[i]).empty();
            flatline_ok = flatline_ok && !detail::is_constant_series(g.counterfactual[i]);
        }
        const auto kind = detail::sample_kind(cfg.anomaly, seasonal_ok, flatline_ok, rng);
        const auto event_id = numbered("e", group_index, 4);
        std::optional<std::pair<IncidentEvent, std::vector<AnomalyRecord>>> made;
        for (int attempt = 0; attempt < 2 && !made; ++attempt) {
            const auto lags = attempt == 0 ? sample_lags(idx.size(), cfg.anomaly, rng)
                                           : std::vector<std::int64_t>(idx.size(), 0);
            try {
                made = make_incident_event(members, kind, lags, event_id, rng, cfg.anomaly);
            } catch (const EventError&) {
            }
        }
        if (made) {
            for (std::size_t k = 0; k < idx.size(); ++k) {
                g.records[idx[k]].push_back(made->second[k]);
                in_event[idx[k]] = true;
            }
            g.events.push_back(std::move(made->first));
        }
    }
    for (std::size_t m = 0; m < size; ++m)
        if (!in_event[m]) {
            Rng prng(derive_seed(cfg.seed, "plan", first_series + m));
            g.records[m] = sample_plan(g.counterfactual[m], cfg.anomaly, prng);
        }
    return g;
}

inline void release_values(TimeSeries& s) {
    std::vector<double>().swap(s.values);
    std::vector<ChannelProfile>().swap(s.profile);
}

}  // namespace gen_detail

// Builds series groups until every category quota can be met, then draws
// questions. Single-series questions are drawn while each group's values are
// in memory; Tier III questions only need keys and time ranges.
inline GeneratedBenchmark build_benchmark(const BenchmarkConfig& cfg, const SeriesSink& sink = {}) {
    using namespace gen_detail;
    cfg.validate();
    GeneratedBenchmark out;
    std::map<Category, std::vector<Question>> by_cat;
    std::size_t question_counter = 0;
    const std::size_t tier3_need = std::max(cfg.count(Category::Correlation), cfg.count(Category::Indicator));
    std::vector<SeriesPair> pairs;

    auto singles_met = [&] {
        for (auto c : kAllCategories)
            if (is_single(c) && by_cat[c].size() < cfg.count(c)) return false;
        return true;
    };
    auto make_pairs = [&] {
        std::vector<const TimeSeries*> ptrs;
        for (const auto& s : out.series) ptrs.push_back(&s);
        Rng prng(derive_seed(cfg.seed, "pairs"));
        return pair_series(ptrs, prng, cfg.pairing);
    };

    for (std::size_t gi = 0;; ++gi) {
        if (singles_met()) {
            if (tier3_need == 0) break;
            pairs = make_pairs();
            if (pairs.size() >= tier3_need) break;
        }
        if (gi >= cfg.max_groups)
            throw ConfigError("could not satisfy the category quotas within " + std::to_string(cfg.max_groups) +
                              " series groups");

        auto g = make_group(cfg, gi, out.series.size());
        Rng rng(derive_seed(cfg.seed, "assign", gi));
        for (std::size_t m = 0; m < g.counterfactual.size(); ++m) {
            TimeSeries& cf = g.counterfactual[m];
            TimeSeries observed = inject(cf, g.records[m]);
            AnswerKey key{cf.series_id, cf.incident_group, g.records[m], {}};
            for (const auto& ev : g.events)
                if (ev.member(cf.series_id)) key.events.push_back(ev);

            std::vector<Category> open;
            for (auto c : kAllCategories)
                if (is_single(c) && by_cat[c].size() < cfg.count(c)) open.push_back(c);
            rng.shuffle(open);
            const SeriesBundle bundle{&observed, &cf, &key};
            std::size_t used = 0;
            for (auto c : open) {
                if (used == cfg.questions_per_series) break;
                const auto seed = derive_seed(cfg.seed, "question", question_counter++);
                Rng qrng(seed);
                try {
                    by_cat[c].push_back(gen_single(c, bundle, qrng, seed));
                    ++used;
                } catch (const ContractViolation&) {
                    // Series unsuitable for this category (e.g. too few channels).
                }
            }
            if (sink) sink(observed, cf, key);
            release_values(cf);
            out.series.push_back(std::move(cf));
            out.keys.push_back(std::move(key));
        }
        for (auto& ev : g.events) out.events.push_back(std::move(ev));
    }

    for (auto cat : {Category::Correlation, Category::Indicator}) {
        const std::size_t want = cfg.count(cat);
        if (want == 0) continue;
        std::vector<std::size_t> order(pairs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng rng(derive_seed(cfg.seed, to_string(cat)));
        rng.shuffle(order);
        for (std::size_t k = 0; k < want; ++k) {
            const auto& p = pairs[order[k]];
            const SeriesBundle a{&out.series[p.first], nullptr, &out.keys[p.first]};
            const SeriesBundle b{&out.series[p.second], nullptr, &out.keys[p.second]};
            const auto seed = derive_seed(cfg.seed, "question", question_counter++);
            by_cat[cat].push_back(cat == Category::Correlation ? gen_correlation(a, b, p.negative, seed)
                                                               : gen_indicator(a, b, p.negative, seed));
        }
    }

    std::size_t id = 0;
    for (auto c : kAllCategories)
        for (auto& q : by_cat[c]) {
            q.question_id = numbered("q", ++id, 5);
            out.questions.push_back(std::move(q));
        }
    return out;
}

// Re-derives every answer from the key files on disk.
inline void verify_soundness(const io::fs::path& root, const std::vector<Question>& questions) {
    baselines::KeyStore keys(root);
    for (const auto& q : questions) {
        std::vector<baselines::OracleSeries> s;
        for (const auto& id : q.series_refs) s.push_back(keys.get(id));
        baselines::oracle_answer(q, s);
    }
}

inline std::string created_at_string(UnixSeconds t) { return format_rfc3339(t); }

// Writes the benchmark into an empty or missing directory. The manifest is
// written last and only after the soundness check passes; on failure every
// written file is removed.
inline BenchmarkManifest generate_benchmark(const BenchmarkConfig& cfg, const io::fs::path& out_dir,
                                            UnixSeconds created_at) {
    namespace fs = io::fs;
    cfg.validate();
    std::error_code ec;
    const bool existed = fs::exists(out_dir, ec);
    if (existed && !fs::is_directory(out_dir, ec)) throw FilesystemError(out_dir.string() + " is not a directory");
    if (existed && !fs::is_empty(out_dir, ec))
        throw FilesystemError("output directory " + out_dir.string() + " is not empty");
    fs::create_directories(out_dir, ec);
    if (ec) throw FilesystemError("cannot create " + out_dir.string() + ": " + ec.message());

    BenchmarkManifest m;
    std::vector<fs::path> written;
    auto put = [&](const std::string& rel, std::string_view data) {
        const auto path = out_dir / rel;
        io::write_file(path, data);
        written.push_back(path);
        return FileEntry{{}, rel, io::sha256_hex(data)};
    };

    try {
        auto bench = build_benchmark(cfg, [&](const TimeSeries& obs, const TimeSeries& cf, const AnswerKey& key) {
            auto e = put(layout::series_rel(obs.series_id), to_csv(obs));
            e.id = obs.series_id;
            m.series.push_back(e);
            auto k = put(layout::key_rel(obs.series_id), to_json(key).dump(1) + "\n");
            k.id = obs.series_id;
            m.keys.push_back(k);
            auto c = put(layout::counterfactual_rel(obs.series_id), to_csv(cf));
            c.id = obs.series_id;
            m.keys.push_back(c);
        });
        nlohmann::json events = nlohmann::json::array();
        for (const auto& ev : bench.events) events.push_back(to_json(ev));
        m.keys.push_back(put(std::string(layout::kKeysDir) + "/" + std::string(layout::kEventsFile), events.dump(1) + "\n"));
        m.questions = put(std::string(layout::kQuestions), to_jsonl(bench.questions));

        verify_soundness(out_dir, bench.questions);

        m.seed = cfg.seed;
        m.config = to_json(cfg);
        m.config_hash = config_hash(cfg);
        m.created_at = created_at_string(created_at);
        m.total = bench.questions.size();
        for (auto c : kAllCategories) m.counts_by_category[std::string(to_string(c))] = 0;
        for (auto t : kAllTiers) m.counts_by_tier[std::string(to_string(t))] = 0;
        for (const auto& q : bench.questions) {
            ++m.counts_by_category[std::string(to_string(q.category))];
            ++m.counts_by_tier[std::string(to_string(q.tier))];
        }
        io::write_file(layout::manifest_path(out_dir), to_json(m).dump(2) + "\n");
        return m;
    } catch (...) {
        for (const auto& p : written) fs::remove(p, ec);
        for (auto sub : {layout::kSeriesDir, layout::kKeysDir})
            if (fs::is_empty(out_dir / sub, ec)) fs::remove(out_dir / sub, ec);
        if (!existed) fs::remove(out_dir, ec);
        throw;
    }
}

}  // namespace arf
