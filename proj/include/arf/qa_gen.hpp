#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "arf/anomaly.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/rng.hpp"
#include "arf/core/time.hpp"
#include "arf/question.hpp"
#include "arf/time_series.hpp"

namespace arf {

// One generated series with everything question generation needs: the
// observed values, the counterfactual (pre-injection) copy and the key.
struct SeriesBundle {
    const TimeSeries* observed = nullptr;
    const TimeSeries* counterfactual = nullptr;
    const AnswerKey* key = nullptr;

    const TimeSeries& series() const { return *observed; }
    bool anomalous() const { return key && !key->records.empty(); }
};

namespace detail {

inline Question blank_question(Category c, std::uint64_t seed) {
    Question q;
    q.category = c;
    q.tier = tier_of(c);
    q.text = std::string(question_template(c));
    q.seed = seed;
    return q;
}

inline void attach_series(Question& q, const TimeSeries& s) {
    q.series_refs.push_back(s.series_id);
    q.captions.push_back(s.caption);
    q.series_paths.push_back("series/" + s.series_id + ".csv");
}

inline Question finish(Question q, std::size_t correct) {
    q.correct_index = correct;
    q.semantic_class_of_option = bin_all(q.category, q.options);
    validate(q);
    return q;
}

inline std::string join_channels(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += opt::kChannelSeparator;
        out += names[i];
    }
    return out;
}

}  // namespace detail

// Earliest start / latest end over all records of a key.
struct AnomalySpan {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;
    bool began_before = false;
};

inline std::optional<AnomalySpan> anomaly_span(const AnswerKey& key) {
    if (key.records.empty()) return std::nullopt;
    AnomalySpan s{key.records[0].start_idx, key.records[0].end_idx, key.records[0].began_before_window};
    for (const auto& r : key.records) {
        if (r.start_idx < s.start_idx || (r.start_idx == s.start_idx && r.began_before_window)) {
            s.start_idx = r.start_idx;
            s.began_before = r.began_before_window;
        }
        s.end_idx = std::max(s.end_idx, r.end_idx);
    }
    return s;
}

// Index of the record with the largest magnitude; ties keep the first.
inline std::size_t dominant_record(const TimeSeries& pre, const TimeSeries& post, const AnswerKey& key) {
    if (key.records.empty()) throw ContractViolation("dominant_record: empty key");
    std::size_t best = 0;
    double best_m = compute_magnitude(pre, post, key.records[0]);
    for (std::size_t i = 1; i < key.records.size(); ++i) {
        const double m = compute_magnitude(pre, post, key.records[i]);
        if (m > best_m) {
            best = i;
            best_m = m;
        }
    }
    return best;
}

// Presence ------------------------------------------------------------------

inline Question gen_presence(const SeriesBundle& b, std::uint64_t seed = 0) {
    Question q = detail::blank_question(Category::Presence, seed);
    detail::attach_series(q, b.series());
    q.options = {std::string(opt::kYes), std::string(opt::kNo)};
    return detail::finish(std::move(q), b.anomalous() ? 0 : 1);
}

// Identification --------------------------------------------------------------

inline Question gen_identification(const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    const TimeSeries& s = b.series();
    if (s.channels < 3) throw ContractViolation("identification needs at least 3 channels");
    std::set<std::size_t> anomalous;
    if (b.key)
        for (const auto& r : b.key->records) anomalous.insert(r.channels.begin(), r.channels.end());

    std::vector<std::size_t> pool_a(anomalous.begin(), anomalous.end());
    std::vector<std::size_t> pool_n;
    for (std::size_t c = 0; c < s.channels; ++c)
        if (!anomalous.count(c)) pool_n.push_back(c);
    rng.shuffle(pool_a);
    rng.shuffle(pool_n);
    std::vector<std::size_t> picked(pool_a.begin(), pool_a.begin() + std::min<std::size_t>(3, pool_a.size()));
    for (std::size_t i = 0; picked.size() < 3; ++i) picked.push_back(pool_n[i]);

    std::vector<std::string> names;
    std::vector<std::string> truth;
    for (auto c : picked) {
        names.push_back(s.channel_names[c]);
        if (anomalous.count(c)) truth.push_back(s.channel_names[c]);
    }
    std::sort(names.begin(), names.end());
    std::sort(truth.begin(), truth.end());

    // Singles and the pair are chosen so the correct combination is offered.
    std::vector<std::string> singles;
    std::vector<std::string> pair;
    std::vector<std::string> others = names;
    if (truth.size() == 1) {
        others.erase(std::find(others.begin(), others.end(), truth[0]));
        singles = {truth[0], rng.pick(others)};
    } else {
        std::vector<std::string> shuffled = names;
        rng.shuffle(shuffled);
        singles = {shuffled[0], shuffled[1]};
    }
    if (truth.size() == 2) {
        pair = truth;
    } else {
        std::vector<std::string> shuffled = names;
        rng.shuffle(shuffled);
        pair = {shuffled[0], shuffled[1]};
    }
    std::sort(singles.begin(), singles.end());

    Question q = detail::blank_question(Category::Identification, seed);
    detail::attach_series(q, s);
    q.options = {singles[0], singles[1], detail::join_channels(pair), detail::join_channels(names),
                 std::string(opt::kNoAnomaly)};
    std::size_t correct = 4;
    if (!truth.empty()) {
        const std::string want = detail::join_channels(truth);
        correct = *q.option_index(want);
    }
    return detail::finish(std::move(q), correct);
}

// Start / end time ------------------------------------------------------------

// Candidates closer than this many steps are considered a tie.
inline std::size_t tie_radius(std::size_t length) {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(length))));
}

// Index into `candidates` nearest to `target`; first wins ties.
inline std::size_t nearest_candidate(const std::vector<std::int64_t>& candidates, std::int64_t target) {
    if (candidates.empty()) throw ContractViolation("nearest_candidate: no candidates");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (std::llabs(candidates[i] - target) < std::llabs(candidates[best] - target)) best = i;
    return best;
}

namespace detail {

// Three indices in [lo, hi], pairwise at least `gap` apart. If `anchor` is
// set, the first lies within radius/2 of it and is the unique nearest.
inline std::vector<std::int64_t> spaced_candidates(std::int64_t lo, std::int64_t hi, std::int64_t gap,
                                                   std::optional<std::int64_t> anchor, std::int64_t radius,
                                                   Rng& rng) {
    std::vector<std::int64_t> out;
    if (anchor) {
        const std::int64_t half = radius / 2;
        out.push_back(std::clamp(*anchor + rng.uniform_int(-half, half), lo, hi));
    }
    auto fits = [&](std::int64_t x) {
        for (auto y : out)
            if (std::llabs(x - y) < gap) return false;
        return true;
    };
    for (int attempt = 0; attempt < 400 && out.size() < 3; ++attempt) {
        const std::int64_t x = rng.uniform_int(lo, hi);
        if (fits(x)) out.push_back(x);
    }
    for (std::int64_t x = lo; out.size() < 3 && x <= hi; ++x)
        if (fits(x)) out.push_back(x);
    if (out.size() < 3) throw ContractViolation("series too short for spaced timestamp candidates");
    return out;
}

inline Question gen_time_question(Category cat, const SeriesBundle& b, Rng& rng, std::uint64_t seed) {
    const TimeSeries& s = b.series();
    const bool start = cat == Category::StartTime;
    const auto T = static_cast<std::int64_t>(s.length);
    const auto r = static_cast<std::int64_t>(tie_radius(s.length));
    const auto span = b.key ? anomaly_span(*b.key) : std::nullopt;

    std::optional<std::int64_t> truth;
    bool sentinel = false;
    if (span) {
        if (start) {
            sentinel = span->began_before;
            if (!sentinel) truth = static_cast<std::int64_t>(span->start_idx);
        } else {
            sentinel = span->end_idx == s.length;
            if (!sentinel) truth = static_cast<std::int64_t>(span->end_idx) - 1;
        }
    }
    // Start candidates avoid index 0 and end candidates avoid T-1, keeping
    // them distinct from the sentinels.
    const std::int64_t lo = start ? 1 : 0;
    const std::int64_t hi = start ? T - 1 : T - 2;
    auto cand = spaced_candidates(lo, hi, 2 * r, truth, r, rng);
    std::sort(cand.begin(), cand.end());

    Question q = blank_question(cat, seed);
    attach_series(q, s);
    for (auto c : cand) q.options.push_back(format_option_time(s.time_at(static_cast<std::size_t>(c))));
    q.options.emplace_back(start ? opt::kBeforeEarliest : opt::kNotResolved);
    q.options.emplace_back(opt::kNoAnomaly);
    std::size_t correct = 4;
    if (sentinel) correct = 3;
    else if (truth) correct = nearest_candidate(cand, *truth);
    return finish(std::move(q), correct);
}

}  // namespace detail

inline Question gen_start_time(const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    return detail::gen_time_question(Category::StartTime, b, rng, seed);
}

inline Question gen_end_time(const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    return detail::gen_time_question(Category::EndTime, b, rng, seed);
}

// Magnitude -------------------------------------------------------------------

inline constexpr std::array<double, 3> kMagnitudeBases{2.0, 5.0, 10.0};
// A base is usable when m sits within this many log units of a rung.
inline constexpr double kMagnitudeMargin = 0.4;
inline constexpr double kMagnitudeFloor = 1e-12;

inline std::int64_t nearest_exponent(double m, double base) {
    return static_cast<std::int64_t>(std::llround(std::log(std::max(m, kMagnitudeFloor)) / std::log(base)));
}

// Smallest base in {2, 5, 10} whose nearest rung is unambiguous.
inline double choose_magnitude_base(double m) {
    for (double b : kMagnitudeBases) {
        const double x = std::log(std::max(m, kMagnitudeFloor)) / std::log(b);
        if (std::abs(x - std::round(x)) <= kMagnitudeMargin) return b;
    }
    return kMagnitudeBases[0];
}

struct MagnitudeLadder {
    double base = 2.0;
    std::vector<double> rungs;  // ascending
    std::size_t correct = 0;    // index of the rung nearest m
};

// Four consecutive powers of `base`; the rung nearest m sits at position
// `shift` (0..3).
inline MagnitudeLadder magnitude_ladder(double m, double base, std::size_t shift) {
    if (shift > 3) throw ContractViolation("ladder shift must be in [0, 3]");
    MagnitudeLadder l;
    l.base = base;
    const std::int64_t k = nearest_exponent(m, base);
    for (std::int64_t i = 0; i < 4; ++i)
        l.rungs.push_back(std::pow(base, static_cast<double>(k - static_cast<std::int64_t>(shift) + i)));
    l.correct = shift;
    return l;
}

inline std::string format_rung(double v) { return io::format_double(v); }

inline Question gen_magnitude(const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    const TimeSeries& s = b.series();
    const std::size_t shift = static_cast<std::size_t>(rng.below(4));
    double m = 1.0;
    const bool anomalous = b.anomalous();
    if (anomalous) {
        if (!b.counterfactual) throw ContractViolation("magnitude question needs the counterfactual series");
        const auto idx = dominant_record(*b.counterfactual, s, *b.key);
        m = compute_magnitude(*b.counterfactual, s, b.key->records[idx]);
    }
    const double base = anomalous ? choose_magnitude_base(m) : kMagnitudeBases[rng.below(kMagnitudeBases.size())];
    if (!anomalous) m = std::pow(base, static_cast<double>(rng.uniform_int(-1, 3)));
    const auto ladder = magnitude_ladder(m, base, shift);

    Question q = detail::blank_question(Category::Magnitude, seed);
    detail::attach_series(q, s);
    for (double v : ladder.rungs) q.options.push_back(format_rung(v));
    q.options.emplace_back(opt::kNoAnomaly);
    return detail::finish(std::move(q), anomalous ? ladder.correct : 4);
}

// Categorization --------------------------------------------------------------

inline std::string_view categorization_option(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::LevelShift: return opt::kLevelShift;
        case AnomalyKind::TransientSpike: return opt::kTransientSpike;
        case AnomalyKind::SeasonalityChange: return opt::kSeasonality;
        case AnomalyKind::VarianceChange: return opt::kVariance;
        case AnomalyKind::TrendChange: return opt::kTrend;
        case AnomalyKind::Flatline: return opt::kLevelShift;
    }
    return opt::kLevelShift;
}

inline Question gen_categorization(const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    const TimeSeries& s = b.series();
    Question q = detail::blank_question(Category::Categorization, seed);
    detail::attach_series(q, s);
    std::string answer(opt::kNoAnomaly);
    if (b.anomalous()) {
        if (!b.counterfactual) throw ContractViolation("categorization question needs the counterfactual series");
        const auto& rec = b.key->records[dominant_record(*b.counterfactual, s, *b.key)];
        answer = categorization_option(rec.kind);
        if (rec.kind == AnomalyKind::Flatline) q.notes.emplace_back("flatline categorized as level shift");
    }
    std::string merged;
    if (answer == opt::kSeasonality || answer == opt::kVariance)
        merged = answer;
    else
        merged = rng.bernoulli(0.5) ? opt::kSeasonality : opt::kVariance;
    q.options = {std::string(opt::kLevelShift), std::string(opt::kTransientSpike), std::string(opt::kTrend), merged,
                 std::string(opt::kNoAnomaly)};
    return detail::finish(std::move(q), *q.option_index(answer));
}

// Tier III --------------------------------------------------------------------

struct SeriesPair {
    std::size_t first = 0;   // indices into the caller's series list
    std::size_t second = 0;
    bool negative = false;   // cross-incident augmentation pair
};

inline bool time_ranges_overlap(const TimeSeries& a, const TimeSeries& b) {
    return a.start_time <= b.end_time() && b.start_time <= a.end_time();
}

// Event id shared by the two keys, if any.
inline std::optional<std::string> shared_event(const AnswerKey& a, const AnswerKey& b) {
    for (const auto& ra : a.records)
        if (ra.event_id)
            for (const auto& rb : b.records)
                if (rb.event_id == ra.event_id) return ra.event_id;
    return std::nullopt;
}

namespace detail {

inline Question pair_question(Category cat, const SeriesBundle& a, const SeriesBundle& b, bool negative,
                              std::uint64_t seed) {
    if (!negative && !time_ranges_overlap(a.series(), b.series()))
        throw PairingError("series " + a.series().series_id + " and " + b.series().series_id +
                           " have non-overlapping time ranges");
    Question q = blank_question(cat, seed);
    attach_series(q, a.series());
    attach_series(q, b.series());
    if (negative) q.notes.emplace_back("cross-incident pair");
    return q;
}

inline const AnomalyRecord* event_record(const AnswerKey& k, const std::string& event_id) {
    for (const auto& r : k.records)
        if (r.event_id == event_id) return &r;
    return nullptr;
}

}  // namespace detail

inline Question gen_correlation(const SeriesBundle& a, const SeriesBundle& b, bool negative = false,
                                std::uint64_t seed = 0) {
    Question q = detail::pair_question(Category::Correlation, a, b, negative, seed);
    for (auto o : opt::kCorrelation) q.options.emplace_back(o);
    std::size_t correct = opt::kCorrNeither;
    if (a.anomalous() && b.anomalous())
        correct = shared_event(*a.key, *b.key) ? opt::kCorrYes : opt::kCorrNotCorrelated;
    else if (a.anomalous())
        correct = opt::kCorrOnly1;
    else if (b.anomalous())
        correct = opt::kCorrOnly2;
    return detail::finish(std::move(q), correct);
}

inline Question gen_indicator(const SeriesBundle& a, const SeriesBundle& b, bool negative = false,
                              std::uint64_t seed = 0) {
    Question q = detail::pair_question(Category::Indicator, a, b, negative, seed);
    for (auto o : opt::kIndicator) q.options.emplace_back(o);
    std::size_t correct = opt::kIndNoAnomaly;
    if (a.anomalous() && b.anomalous()) {
        correct = opt::kIndNotCorrelated;
        if (auto ev = shared_event(*a.key, *b.key)) {
            const auto la = detail::event_record(*a.key, *ev)->lag_steps;
            const auto lb = detail::event_record(*b.key, *ev)->lag_steps;
            correct = la < lb ? opt::kIndLeading : la > lb ? opt::kIndLagging : opt::kIndPerfect;
        }
    }
    return detail::finish(std::move(q), correct);
}

struct PairingConfig {
    std::size_t max_pairs_per_group = 10;
    double negative_fraction = 0.3;
};

// Within-group pairs (capped per group, random orientation) followed by
// round(negative_fraction * within) cross-group pairs.
inline std::vector<SeriesPair> pair_series(const std::vector<const TimeSeries*>& series, Rng& rng,
                                           const PairingConfig& config = {}) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < series.size(); ++i) groups[series[i]->incident_group].push_back(i);

    std::vector<SeriesPair> out;
    for (auto& [group, members] : groups) {
        std::vector<SeriesPair> local;
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                if (!time_ranges_overlap(*series[members[i]], *series[members[j]])) continue;
                SeriesPair p{members[i], members[j], false};
                if (rng.bernoulli(0.5)) std::swap(p.first, p.second);
                local.push_back(p);
            }
        rng.shuffle(local);
        if (local.size() > config.max_pairs_per_group) local.resize(config.max_pairs_per_group);
        out.insert(out.end(), local.begin(), local.end());
    }

    const auto want = static_cast<std::size_t>(std::llround(config.negative_fraction * static_cast<double>(out.size())));
    if (groups.size() < 2 || want == 0) return out;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::size_t added = 0;
    for (std::size_t attempt = 0; added < want && attempt < 100 * want; ++attempt) {
        const auto i = static_cast<std::size_t>(rng.below(series.size()));
        const auto j = static_cast<std::size_t>(rng.below(series.size()));
        if (series[i]->incident_group == series[j]->incident_group) continue;
        if (!seen.insert({std::min(i, j), std::max(i, j)}).second) continue;
        out.push_back({i, j, true});
        ++added;
    }
    return out;
}

// Dispatch for single-series categories.
inline Question gen_single(Category c, const SeriesBundle& b, Rng& rng, std::uint64_t seed = 0) {
    switch (c) {
        case Category::Presence: return gen_presence(b, seed);
        case Category::Identification: return gen_identification(b, rng, seed);
        case Category::StartTime: return gen_start_time(b, rng, seed);
        case Category::EndTime: return gen_end_time(b, rng, seed);
        case Category::Magnitude: return gen_magnitude(b, rng, seed);
        case Category::Categorization: return gen_categorization(b, rng, seed);
        default: throw ContractViolation("gen_single: category needs a series pair");
    }
}

}  // namespace arf
