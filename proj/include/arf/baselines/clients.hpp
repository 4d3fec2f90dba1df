#pragma once

#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "arf/baselines/oracle.hpp"
#include "arf/baselines/zscore.hpp"
#include "arf/benchmark/layout.hpp"
#include "arf/core/error.hpp"
#include "arf/core/rng.hpp"
#include "arf/eval/client.hpp"
#include "arf/question.hpp"

namespace arf::baselines {

inline constexpr std::string_view kRandom = "baseline:random";
inline constexpr std::string_view kFrequent = "baseline:frequent";
inline constexpr std::string_view kOracle = "baseline:oracle";
inline constexpr std::string_view kZScore = "baseline:zscore";

inline bool is_baseline_name(std::string_view name) { return name.rfind("baseline:", 0) == 0; }

inline std::size_t random_choice(std::size_t n_options, Rng& rng) { return static_cast<std::size_t>(rng.below(n_options)); }

// Modal correct semantic class per category.
using LabelStats = std::map<Category, std::string>;

inline LabelStats label_stats(const std::vector<Question>& questions) {
    std::map<Category, std::map<std::string, std::size_t>> counts;
    for (const auto& q : questions) ++counts[q.category][q.correct_class()];
    LabelStats out;
    for (const auto& [cat, hist] : counts) {
        // Ties go to the class listed first in the category's class order.
        const auto& order = semantic_classes(cat);
        std::size_t best_n = 0;
        for (const auto& cls : order) {
            auto it = hist.find(cls);
            if (it != hist.end() && it->second > best_n) {
                best_n = it->second;
                out[cat] = cls;
            }
        }
    }
    return out;
}

// Modal class if offered, otherwise a uniformly random option.
inline std::size_t frequent_choice(const Question& q, const LabelStats& stats, Rng& rng) {
    auto it = stats.find(q.category);
    if (it != stats.end())
        for (std::size_t i = 0; i < q.semantic_class_of_option.size(); ++i)
            if (q.semantic_class_of_option[i] == it->second) return i;
    return random_choice(q.options.size(), rng);
}

// Base for in-process baselines: choose a canonical index, answer with the
// option text as JSON.
class BaselineClient : public eval::ModelClient {
public:
    explicit BaselineClient(std::uint64_t seed) : seed_(seed) {}
    bool deterministic() const override { return true; }

    eval::Completion complete(const eval::PromptPayload& p) override {
        if (!p.question) throw HarnessError("baseline clients need the question in the payload");
        Rng rng(derive_seed(seed_, name(), hash_tag(p.question->question_id)));
        const std::size_t canonical = choose(*p.question, rng);
        nlohmann::ordered_json j;
        j["answer"] = p.question->options.at(canonical);
        j["reasoning"] = name();
        return {j.dump(), 0, 0};
    }

protected:
    virtual std::size_t choose(const Question& q, Rng& rng) = 0;
    std::uint64_t seed_;
};

class RandomClient : public BaselineClient {
public:
    using BaselineClient::BaselineClient;
    std::string name() const override { return std::string(kRandom); }

protected:
    std::size_t choose(const Question& q, Rng& rng) override { return random_choice(q.options.size(), rng); }
};

class FrequentClient : public BaselineClient {
public:
    FrequentClient(std::uint64_t seed, LabelStats stats) : BaselineClient(seed), stats_(std::move(stats)) {}
    std::string name() const override { return std::string(kFrequent); }

protected:
    std::size_t choose(const Question& q, Rng& rng) override {
        if (!stats_.count(q.category)) {
            std::lock_guard lock(warn_m_);
            if (warned_.insert(q.category).second)
                std::cerr << "warning: no label stats for category " << to_string(q.category)
                          << "; answering at random\n";
        }
        return frequent_choice(q, stats_, rng);
    }

private:
    LabelStats stats_;
    std::mutex warn_m_;
    std::set<Category> warned_;
};

class OracleClient : public BaselineClient {
public:
    explicit OracleClient(io::fs::path root) : BaselineClient(0), keys_(std::move(root)) {}
    std::string name() const override { return std::string(kOracle); }

protected:
    std::size_t choose(const Question& q, Rng&) override {
        std::vector<OracleSeries> s;
        for (const auto& id : q.series_refs) s.push_back(keys_.get(id));
        return oracle_answer(q, s);
    }

private:
    KeyStore keys_;
};

class ZScoreClient : public BaselineClient {
public:
    ZScoreClient(io::fs::path root, ZScoreConfig cfg = {}) : BaselineClient(0), series_(std::move(root)), cfg_(cfg) {}
    std::string name() const override { return std::string(kZScore); }

protected:
    std::size_t choose(const Question& q, Rng&) override {
        std::vector<std::shared_ptr<const TimeSeries>> hold;
        std::vector<const TimeSeries*> ptrs;
        for (const auto& id : q.series_refs) {
            hold.push_back(series_.get(id));
            ptrs.push_back(hold.back().get());
        }
        return zscore_answer(q, ptrs, cfg_);
    }

private:
    layout::SeriesCache series_;
    ZScoreConfig cfg_;
};

inline std::unique_ptr<eval::ModelClient> make_baseline(std::string_view name, const io::fs::path& root,
                                                        const std::vector<Question>& questions, std::uint64_t seed) {
    if (name == kRandom) return std::make_unique<RandomClient>(seed);
    if (name == kFrequent) return std::make_unique<FrequentClient>(seed, label_stats(questions));
    if (name == kOracle) return std::make_unique<OracleClient>(root);
    if (name == kZScore) return std::make_unique<ZScoreClient>(root);
    throw ConfigError("unknown baseline '" + std::string(name) + "'");
}

}  // namespace arf::baselines
