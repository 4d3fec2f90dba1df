#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "arf/core/error.hpp"
#include "arf/core/rng.hpp"
#include "arf/eval/records.hpp"
#include "arf/question.hpp"

namespace arf::metrics {

using eval::EvalRecord;

struct Scope {
    std::optional<Tier> tier;
    std::optional<Category> category;

    static Scope all() { return {}; }
    static Scope of(Tier t) { return {t, std::nullopt}; }
    static Scope of(Category c) { return {std::nullopt, c}; }

    bool contains(const Question& q) const {
        if (tier && q.tier != *tier) return false;
        if (category && q.category != *category) return false;
        return true;
    }
};

// One question joined with its record.
struct Outcome {
    const Question* question = nullptr;
    std::optional<std::string> predicted;  // semantic class; empty when invalid or unanswered
    bool correct = false;
    bool invalid = false;
    bool unanswered = false;
};

// Joins records to questions in benchmark order. Every question needs exactly
// one record and every record must name a benchmark question.
inline std::vector<Outcome> align(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark) {
    std::unordered_map<std::string_view, const EvalRecord*> by_id;
    for (const auto& r : records)
        if (!by_id.emplace(r.question_id, &r).second)
            throw AlignmentError("duplicate record for question " + r.question_id);
    std::vector<Outcome> out;
    out.reserve(benchmark.size());
    for (const auto& q : benchmark) {
        auto it = by_id.find(q.question_id);
        if (it == by_id.end()) throw AlignmentError("no record for question " + q.question_id);
        const EvalRecord& r = *it->second;
        Outcome o;
        o.question = &q;
        if (r.canonical_index) {
            if (*r.canonical_index >= q.options.size())
                throw AlignmentError("record for " + q.question_id + " points past the option list");
            if (q.semantic_class_of_option.size() != q.options.size())
                throw SchemaError("question " + q.question_id + " has unbinned options");
            o.predicted = q.semantic_class_of_option[*r.canonical_index];
            o.correct = *r.canonical_index == q.correct_index;
        } else {
            o.unanswered = r.unanswered;
            o.invalid = !r.unanswered;
        }
        out.push_back(o);
        by_id.erase(it);
    }
    if (!by_id.empty()) throw AlignmentError("record for unknown question " + std::string(by_id.begin()->first));
    return out;
}

inline std::vector<const Outcome*> in_scope(const std::vector<Outcome>& outcomes, const Scope& scope) {
    std::vector<const Outcome*> out;
    for (const auto& o : outcomes)
        if (scope.contains(*o.question)) out.push_back(&o);
    return out;
}

// Accuracy --------------------------------------------------------------------

inline double accuracy(const std::vector<Outcome>& outcomes, const Scope& scope = {}) {
    std::size_t n = 0, hit = 0;
    for (const auto& o : outcomes) {
        if (!scope.contains(*o.question)) continue;
        ++n;
        hit += o.correct;
    }
    if (n == 0) throw UndefinedStatistic("accuracy over an empty scope");
    return static_cast<double>(hit) / static_cast<double>(n);
}

inline double accuracy(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark,
                       const Scope& scope = {}) {
    return accuracy(align(records, benchmark), scope);
}

// Macro-F1 --------------------------------------------------------------------

enum class Pooling { Namespaced, CategoryMean };

inline std::string_view to_string(Pooling p) { return p == Pooling::Namespaced ? "namespaced" : "category_mean"; }

inline Pooling pooling_from_string(std::string_view s) {
    if (s == "namespaced") return Pooling::Namespaced;
    if (s == "category_mean") return Pooling::CategoryMean;
    throw ConfigError("unknown F1 pooling '" + std::string(s) + "'");
}

inline constexpr std::size_t kDefaultF1Seeds = 10;

inline std::vector<std::uint64_t> reassignment_seeds(std::uint64_t root, std::size_t n) {
    std::vector<std::uint64_t> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = derive_seed(root, "invalid", k);
    return out;
}

// Predicted class per outcome with invalid and unanswered answers moved to a
// uniformly chosen incorrect class of their own question.
inline std::vector<std::string> resolved_predictions(const std::vector<Outcome>& outcomes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (o.predicted) {
            out.push_back(*o.predicted);
            continue;
        }
        const Question& q = *o.question;
        std::vector<const std::string*> wrong;
        for (std::size_t i = 0; i < q.options.size(); ++i)
            if (q.semantic_class_of_option.at(i) != q.correct_class()) wrong.push_back(&q.semantic_class_of_option[i]);
        if (wrong.empty()) throw SchemaError("question " + q.question_id + " has no incorrect class");
        out.push_back(*wrong[rng.below(wrong.size())]);
    }
    return out;
}

struct ClassCounts {
    std::size_t tp = 0, fp = 0, fn = 0;

    double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
    double f1() const {
        const std::size_t d = 2 * tp + fp + fn;
        return d == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
    }
};

inline std::string class_key(Category c, const std::string& cls) { return std::string(to_string(c)) + "::" + cls; }

// Counts keyed by namespaced class; only classes seen in truth or prediction
// appear.
inline std::map<std::string, ClassCounts> class_counts(const std::vector<Outcome>& outcomes,
                                                       const std::vector<std::string>& predicted,
                                                       const std::vector<std::size_t>& rows) {
    std::map<std::string, ClassCounts> m;
    for (std::size_t i : rows) {
        const Question& q = *outcomes[i].question;
        const auto truth = class_key(q.category, q.correct_class());
        const auto pred = class_key(q.category, predicted[i]);
        if (truth == pred) {
            ++m[truth].tp;
        } else {
            ++m[truth].fn;
            ++m[pred].fp;
        }
    }
    return m;
}

inline double mean_f1(const std::map<std::string, ClassCounts>& counts) {
    if (counts.empty()) throw UndefinedStatistic("macro-F1 over an empty scope");
    double s = 0.0;
    for (const auto& [_, c] : counts) s += c.f1();
    return s / static_cast<double>(counts.size());
}

inline double pooled_f1(const std::vector<Outcome>& outcomes, const std::vector<std::string>& predicted,
                        const std::vector<std::size_t>& rows, Pooling pooling) {
    if (pooling == Pooling::Namespaced) return mean_f1(class_counts(outcomes, predicted, rows));
    std::map<Category, std::vector<std::size_t>> by_cat;
    for (std::size_t i : rows) by_cat[outcomes[i].question->category].push_back(i);
    if (by_cat.empty()) throw UndefinedStatistic("macro-F1 over an empty scope");
    double s = 0.0;
    for (const auto& [_, r] : by_cat) s += mean_f1(class_counts(outcomes, predicted, r));
    return s / static_cast<double>(by_cat.size());
}

inline std::vector<std::size_t> scope_rows(const std::vector<Outcome>& outcomes, const Scope& scope) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (scope.contains(*outcomes[i].question)) rows.push_back(i);
    return rows;
}

inline bool any_unresolved(const std::vector<Outcome>& outcomes) {
    return std::any_of(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return !o.predicted; });
}

struct F1Options {
    std::size_t n_seeds = kDefaultF1Seeds;
    std::uint64_t seed = 0;
    Pooling pooling = Pooling::Namespaced;
};

// Seed-averaged predictions are only needed when something must be reassigned.
inline std::vector<std::vector<std::string>> prediction_sets(const std::vector<Outcome>& outcomes,
                                                             const F1Options& opt) {
    if (opt.n_seeds == 0) throw ConfigError("macro-F1 needs at least one seed");
    std::vector<std::vector<std::string>> sets;
    const auto seeds = reassignment_seeds(opt.seed, any_unresolved(outcomes) ? opt.n_seeds : 1);
    for (auto s : seeds) sets.push_back(resolved_predictions(outcomes, s));
    return sets;
}

inline double macro_f1(const std::vector<Outcome>& outcomes, const Scope& scope = {}, const F1Options& opt = {}) {
    const auto rows = scope_rows(outcomes, scope);
    if (rows.empty()) throw UndefinedStatistic("macro-F1 over an empty scope");
    const auto sets = prediction_sets(outcomes, opt);
    double s = 0.0;
    for (const auto& p : sets) s += pooled_f1(outcomes, p, rows, opt.pooling);
    return s / static_cast<double>(sets.size());
}

inline double macro_f1(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark,
                       const Scope& scope = {}, const F1Options& opt = {}) {
    return macro_f1(align(records, benchmark), scope, opt);
}

struct ClassPR {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct PrecisionRecall {
    std::map<std::string, ClassPR> per_class;  // namespaced class keys
    double macro_precision = 0.0;
    double macro_recall = 0.0;
};

// One-vs-rest precision and recall, averaged over the same reassignment seeds
// as macro_f1.
inline PrecisionRecall precision_recall(const std::vector<Outcome>& outcomes, const Scope& scope = {},
                                        const F1Options& opt = {}) {
    const auto rows = scope_rows(outcomes, scope);
    if (rows.empty()) throw UndefinedStatistic("precision/recall over an empty scope");
    const auto sets = prediction_sets(outcomes, opt);
    PrecisionRecall pr;
    const double w = 1.0 / static_cast<double>(sets.size());
    for (const auto& p : sets) {
        const auto counts = class_counts(outcomes, p, rows);
        double ps = 0.0, rs = 0.0;
        for (const auto& [k, c] : counts) {
            auto& e = pr.per_class[k];
            e.precision += w * c.precision();
            e.recall += w * c.recall();
            e.f1 += w * c.f1();
            e.support = c.tp + c.fn;
            ps += c.precision();
            rs += c.recall();
        }
        pr.macro_precision += w * ps / static_cast<double>(counts.size());
        pr.macro_recall += w * rs / static_cast<double>(counts.size());
    }
    return pr;
}

inline PrecisionRecall precision_recall(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark,
                                        const Scope& scope = {}, const F1Options& opt = {}) {
    return precision_recall(align(records, benchmark), scope, opt);
}

// Bootstrap -------------------------------------------------------------------

struct BootstrapConfig {
    std::size_t n_batches = 1000;
    std::size_t batch_size = 750;
    double level = 0.95;
    std::uint64_t seed = 0;
};

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Linear interpolation between order statistics.
inline double percentile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) throw UndefinedStatistic("percentile of an empty sample");
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Interval percentile_interval(std::vector<double> stats, double level) {
    std::sort(stats.begin(), stats.end());
    const double tail = (1.0 - level) / 2.0;
    return {percentile_sorted(stats, tail), percentile_sorted(stats, 1.0 - tail)};
}

// Statistic over a resample given as indices into the population.
using ResampleStatistic = std::function<double(const std::vector<std::size_t>&)>;

inline Interval bootstrap_interval(std::size_t population, const ResampleStatistic& stat, const BootstrapConfig& cfg) {
    if (population == 0) throw UndefinedStatistic("bootstrap over no records");
    if (cfg.n_batches == 0 || cfg.batch_size == 0) throw ConfigError("bootstrap needs positive batch count and size");
    std::vector<double> stats(cfg.n_batches);
    std::vector<std::size_t> idx(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.n_batches; ++b) {
        Rng rng(derive_seed(cfg.seed, "bootstrap", b));
        for (auto& i : idx) i = rng.below(population);
        stats[b] = stat(idx);
    }
    return percentile_interval(std::move(stats), cfg.level);
}

// Fast path for a mean of 0/1 outcomes; draws the same indices as
// bootstrap_interval.
inline Interval bootstrap_mean(const std::vector<std::uint8_t>& hits, const BootstrapConfig& cfg) {
    if (hits.empty()) throw UndefinedStatistic("bootstrap over no records");
    if (cfg.n_batches == 0 || cfg.batch_size == 0) throw ConfigError("bootstrap needs positive batch count and size");
    std::vector<double> stats(cfg.n_batches);
    for (std::size_t b = 0; b < cfg.n_batches; ++b) {
        Rng rng(derive_seed(cfg.seed, "bootstrap", b));
        std::size_t s = 0;
        for (std::size_t k = 0; k < cfg.batch_size; ++k) s += hits[rng.below(hits.size())];
        stats[b] = static_cast<double>(s) / static_cast<double>(cfg.batch_size);
    }
    return percentile_interval(std::move(stats), cfg.level);
}

enum class Statistic { Accuracy, MacroF1 };

inline Interval bootstrap_ci(const std::vector<Outcome>& outcomes, Statistic statistic, const BootstrapConfig& cfg = {},
                             const Scope& scope = {}, const F1Options& f1 = {}) {
    const auto rows = scope_rows(outcomes, scope);
    if (rows.empty()) throw UndefinedStatistic("bootstrap over an empty scope");
    if (statistic == Statistic::Accuracy) {
        std::vector<std::uint8_t> hits;
        hits.reserve(rows.size());
        for (auto i : rows) hits.push_back(outcomes[i].correct ? 1 : 0);
        return bootstrap_mean(hits, cfg);
    }
    const auto sets = prediction_sets(outcomes, f1);
    std::vector<std::size_t> sample;
    return bootstrap_interval(
        rows.size(),
        [&](const std::vector<std::size_t>& idx) {
            sample.clear();
            for (auto i : idx) sample.push_back(rows[i]);
            double s = 0.0;
            for (const auto& p : sets) s += pooled_f1(outcomes, p, sample, f1.pooling);
            return s / static_cast<double>(sets.size());
        },
        cfg);
}

inline Interval bootstrap_ci(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark,
                             Statistic statistic, const BootstrapConfig& cfg = {}) {
    return bootstrap_ci(align(records, benchmark), statistic, cfg);
}

// Agreement -------------------------------------------------------------------

inline double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) throw ContractViolation("kappa needs aligned label sequences");
    if (a.empty()) throw UndefinedStatistic("kappa over no items");
    const double n = static_cast<double>(a.size());
    std::map<std::string, std::pair<std::size_t, std::size_t>> marg;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        agree += a[i] == b[i];
        ++marg[a[i]].first;
        ++marg[b[i]].second;
    }
    double pe = 0.0;
    for (const auto& [_, m] : marg) pe += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
    if (pe >= 1.0) throw UndefinedStatistic("kappa undefined: chance agreement is 1");
    const double po = static_cast<double>(agree) / n;
    return (po - pe) / (1.0 - pe);
}

// labels[coder][unit]; nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<std::string>>>;

// Nominal alpha from the coincidence matrix. Units with fewer than two
// ratings are not pairable and drop out.
inline double kripp_alpha(const RatingMatrix& labels) {
    if (labels.size() < 2) throw ContractViolation("alpha needs at least two coders");
    const std::size_t units = labels.front().size();
    for (const auto& row : labels)
        if (row.size() != units) throw ContractViolation("alpha needs one rating slot per unit for every coder");

    std::map<std::string, std::size_t> code;
    for (const auto& row : labels)
        for (const auto& v : row)
            if (v) code.emplace(*v, 0);
    std::size_t k = 0;
    for (auto& [_, id] : code) id = k++;

    std::vector<double> o(k * k, 0.0);
    std::vector<std::size_t> cnt(k);
    for (std::size_t u = 0; u < units; ++u) {
        std::fill(cnt.begin(), cnt.end(), 0);
        std::size_t m = 0;
        for (const auto& row : labels)
            if (row[u]) {
                ++cnt[code[*row[u]]];
                ++m;
            }
        if (m < 2) continue;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t d = 0; d < k; ++d)
                o[c * k + d] += w * static_cast<double>(cnt[c] * (c == d ? cnt[c] - (cnt[c] > 0) : cnt[d]));
    }

    std::vector<double> nc(k, 0.0);
    double n = 0.0, disagree = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            nc[c] += o[c * k + d];
            n += o[c * k + d];
            if (c != d) disagree += o[c * k + d];
        }
    double expected = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d)
            if (c != d) expected += nc[c] * nc[d];
    if (n <= 1.0 || expected == 0.0) throw UndefinedStatistic("alpha undefined: no variation in pairable values");
    return 1.0 - (n - 1.0) * disagree / expected;
}

// Reports ---------------------------------------------------------------------

struct ScoreOptions {
    F1Options f1;
    BootstrapConfig bootstrap;
    bool with_ci = true;
};

struct ScoreReport {
    std::string model;
    std::size_t n_questions = 0;
    std::size_t n_correct = 0;
    std::size_t n_invalid = 0;
    std::size_t n_unanswered = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::map<std::string, double> accuracy_by_tier;
    std::map<std::string, double> accuracy_by_category;
    std::map<std::string, double> f1_by_tier;
    std::map<std::string, double> f1_by_category;
    std::map<std::string, std::pair<double, double>> precision_recall_by_tier;
    std::optional<Interval> accuracy_ci;
    std::optional<Interval> f1_ci;
    std::vector<std::uint64_t> invalid_seeds;
    Pooling pooling = Pooling::Namespaced;
    BootstrapConfig bootstrap;
};

inline ScoreReport score(const std::vector<Outcome>& outcomes, std::string model, const ScoreOptions& opt = {}) {
    ScoreReport r;
    r.model = std::move(model);
    r.n_questions = outcomes.size();
    for (const auto& o : outcomes) {
        r.n_correct += o.correct;
        r.n_invalid += o.invalid;
        r.n_unanswered += o.unanswered;
    }
    r.accuracy = accuracy(outcomes);
    r.macro_f1 = macro_f1(outcomes, {}, opt.f1);
    for (Tier t : kAllTiers) {
        const auto s = Scope::of(t);
        if (scope_rows(outcomes, s).empty()) continue;
        const std::string name(to_string(t));
        r.accuracy_by_tier[name] = accuracy(outcomes, s);
        r.f1_by_tier[name] = macro_f1(outcomes, s, opt.f1);
        const auto pr = precision_recall(outcomes, s, opt.f1);
        r.precision_recall_by_tier[name] = {pr.macro_precision, pr.macro_recall};
    }
    for (Category c : kAllCategories) {
        const auto s = Scope::of(c);
        if (scope_rows(outcomes, s).empty()) continue;
        const std::string name(to_string(c));
        r.accuracy_by_category[name] = accuracy(outcomes, s);
        r.f1_by_category[name] = macro_f1(outcomes, s, opt.f1);
    }
    if (opt.with_ci) {
        r.accuracy_ci = bootstrap_ci(outcomes, Statistic::Accuracy, opt.bootstrap, {}, opt.f1);
        r.f1_ci = bootstrap_ci(outcomes, Statistic::MacroF1, opt.bootstrap, {}, opt.f1);
    }
    r.invalid_seeds = reassignment_seeds(opt.f1.seed, any_unresolved(outcomes) ? opt.f1.n_seeds : 1);
    r.pooling = opt.f1.pooling;
    r.bootstrap = opt.bootstrap;
    return r;
}

inline ScoreReport score(const std::vector<EvalRecord>& records, const std::vector<Question>& benchmark,
                         std::string model, const ScoreOptions& opt = {}) {
    return score(align(records, benchmark), std::move(model), opt);
}

// Best-of-2: A's record when A is right or both are wrong, B's when only B is
// right.
inline std::vector<EvalRecord> merge_best_of_2(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b,
                                               const std::vector<Question>& benchmark) {
    const auto oa = align(a, benchmark);
    const auto ob = align(b, benchmark);
    std::unordered_map<std::string_view, const EvalRecord*> ra, rb;
    for (const auto& r : a) ra.emplace(r.question_id, &r);
    for (const auto& r : b) rb.emplace(r.question_id, &r);
    std::vector<EvalRecord> merged;
    merged.reserve(benchmark.size());
    for (std::size_t i = 0; i < benchmark.size(); ++i) {
        const auto& id = benchmark[i].question_id;
        merged.push_back(!oa[i].correct && ob[i].correct ? *rb.at(id) : *ra.at(id));
    }
    return merged;
}

inline ScoreReport model_expert_oracle(const std::vector<EvalRecord>& a, const std::vector<EvalRecord>& b,
                                       const std::vector<Question>& benchmark, std::string model = "best-of-2",
                                       const ScoreOptions& opt = {}) {
    return score(merge_best_of_2(a, b, benchmark), benchmark, std::move(model), opt);
}

inline nlohmann::ordered_json to_json(const ScoreReport& r) {
    nlohmann::ordered_json j;
    j["model"] = r.model;
    j["n_questions"] = r.n_questions;
    j["n_correct"] = r.n_correct;
    j["n_invalid"] = r.n_invalid;
    j["n_unanswered"] = r.n_unanswered;
    j["accuracy"] = {{"overall", r.accuracy}, {"by_tier", r.accuracy_by_tier}, {"by_category", r.accuracy_by_category}};
    j["macro_f1"] = {{"overall", r.macro_f1}, {"by_tier", r.f1_by_tier}, {"by_category", r.f1_by_category}};
    nlohmann::ordered_json pr = nlohmann::ordered_json::object();
    for (const auto& [t, v] : r.precision_recall_by_tier) pr[t] = {{"precision", v.first}, {"recall", v.second}};
    j["precision_recall_by_tier"] = pr;
    auto ci = [](const std::optional<Interval>& i) -> nlohmann::ordered_json {
        if (!i) return nullptr;
        return {{"low", i->low}, {"high", i->high}};
    };
    j["accuracy_ci"] = ci(r.accuracy_ci);
    j["f1_ci"] = ci(r.f1_ci);
    j["invalid_seeds"] = r.invalid_seeds;
    j["pooling"] = to_string(r.pooling);
    j["bootstrap"] = {{"n_batches", r.bootstrap.n_batches},
                      {"batch_size", r.bootstrap.batch_size},
                      {"level", r.bootstrap.level},
                      {"seed", r.bootstrap.seed}};
    return j;
}

inline ScoreReport report_from_json(const nlohmann::json& j) {
    try {
        ScoreReport r;
        r.model = j.at("model").get<std::string>();
        r.n_questions = j.at("n_questions").get<std::size_t>();
        r.n_correct = j.at("n_correct").get<std::size_t>();
        r.n_invalid = j.at("n_invalid").get<std::size_t>();
        r.n_unanswered = j.at("n_unanswered").get<std::size_t>();
        r.accuracy = j.at("accuracy").at("overall").get<double>();
        r.accuracy_by_tier = j.at("accuracy").at("by_tier").get<std::map<std::string, double>>();
        r.accuracy_by_category = j.at("accuracy").at("by_category").get<std::map<std::string, double>>();
        r.macro_f1 = j.at("macro_f1").at("overall").get<double>();
        r.f1_by_tier = j.at("macro_f1").at("by_tier").get<std::map<std::string, double>>();
        r.f1_by_category = j.at("macro_f1").at("by_category").get<std::map<std::string, double>>();
        for (const auto& [t, v] : j.at("precision_recall_by_tier").items())
            r.precision_recall_by_tier[t] = {v.at("precision").get<double>(), v.at("recall").get<double>()};
        auto ci = [](const nlohmann::json& v) -> std::optional<Interval> {
            if (v.is_null()) return std::nullopt;
            return Interval{v.at("low").get<double>(), v.at("high").get<double>()};
        };
        r.accuracy_ci = ci(j.at("accuracy_ci"));
        r.f1_ci = ci(j.at("f1_ci"));
        r.invalid_seeds = j.at("invalid_seeds").get<std::vector<std::uint64_t>>();
        r.pooling = pooling_from_string(j.at("pooling").get<std::string>());
        const auto& b = j.at("bootstrap");
        r.bootstrap = {b.at("n_batches").get<std::size_t>(), b.at("batch_size").get<std::size_t>(),
                       b.at("level").get<double>(), b.at("seed").get<std::uint64_t>()};
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed score report: ") + e.what());
    }
}

// Tables ------------------------------------------------------------------------

namespace detail {

inline std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

inline std::string pct_at(const std::map<std::string, double>& m, const std::string& key) {
    auto it = m.find(key);
    return it == m.end() ? "-" : pct(it->second);
}

inline std::string with_ci(double v, const std::optional<Interval>& ci) {
    if (!ci) return pct(v);
    return pct(v) + " [" + pct(ci->low) + ", " + pct(ci->high) + "]";
}

inline std::vector<std::string> header() {
    return {"Model", "Accuracy", "Acc I", "Acc II", "Acc III", "F1", "F1 I", "F1 II", "F1 III"};
}

inline std::vector<std::string> row(const ScoreReport& r) {
    return {r.model,
            with_ci(r.accuracy, r.accuracy_ci),
            pct_at(r.accuracy_by_tier, "I"),
            pct_at(r.accuracy_by_tier, "II"),
            pct_at(r.accuracy_by_tier, "III"),
            with_ci(r.macro_f1, r.f1_ci),
            pct_at(r.f1_by_tier, "I"),
            pct_at(r.f1_by_tier, "II"),
            pct_at(r.f1_by_tier, "III")};
}

}  // namespace detail

// Models as rows, overall and per-tier accuracy and F1 as columns (percent).
inline std::string format_table(const std::vector<ScoreReport>& reports) {
    std::vector<std::vector<std::string>> rows{detail::header()};
    for (const auto& r : reports) rows.push_back(detail::row(r));
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            if (c) os << "  ";
            const auto& cell = rows[i][c];
            if (c == 0) os << cell << std::string(width[c] - cell.size(), ' ');
            else os << std::string(width[c] - cell.size(), ' ') << cell;
        }
        os << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
        }
    }
    return os.str();
}

inline std::string format_markdown(const std::vector<ScoreReport>& reports) {
    std::ostringstream os;
    const auto h = detail::header();
    os << '|';
    for (const auto& c : h) os << ' ' << c << " |";
    os << "\n|";
    for (std::size_t c = 0; c < h.size(); ++c) os << (c == 0 ? " --- |" : " ---: |");
    os << '\n';
    for (const auto& r : reports) {
        os << '|';
        for (const auto& c : detail::row(r)) os << ' ' << c << " |";
        os << '\n';
    }
    if (!reports.empty()) {
        os << "\n| Model |";
        for (Category c : kAllCategories) os << ' ' << to_string(c) << " |";
        os << "\n| --- |";
        for (std::size_t i = 0; i < kAllCategories.size(); ++i) os << " ---: |";
        os << '\n';
        for (const auto& r : reports) {
            os << "| " << r.model << " |";
            for (Category c : kAllCategories) os << ' ' << detail::pct_at(r.accuracy_by_category, std::string(to_string(c))) << " |";
            os << '\n';
        }
        os << "\nCounts: ";
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& r = reports[i];
            if (i) os << "; ";
            os << r.model << " n=" << r.n_questions << " invalid=" << r.n_invalid << " unanswered=" << r.n_unanswered;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace arf::metrics
