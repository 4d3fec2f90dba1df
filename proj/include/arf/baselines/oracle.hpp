#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "arf/anomaly.hpp"
#include "arf/benchmark/layout.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/time.hpp"
#include "arf/question.hpp"
#include "arf/time_series.hpp"

// Answer-key oracle. Every answer is recomputed from the stored records and
// a cell-by-cell comparison of the observed and counterfactual CSVs; nothing
// here calls into the question generator.
namespace arf::baselines {

struct DiffScan {
    std::optional<std::size_t> first;
    std::optional<std::size_t> last;
    std::set<std::size_t> channels;

    bool any() const noexcept { return first.has_value(); }
};

inline bool same_cell(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

inline DiffScan scan_diff(const TimeSeries& observed, const TimeSeries& counterfactual,
                          const std::vector<std::size_t>* only_channels = nullptr) {
    if (observed.length != counterfactual.length || observed.channels != counterfactual.channels)
        throw IntegrityError("series " + observed.series_id + ": counterfactual shape differs from observed");
    DiffScan d;
    std::vector<std::size_t> chans;
    if (only_channels) chans = *only_channels;
    else
        for (std::size_t c = 0; c < observed.channels; ++c) chans.push_back(c);
    for (std::size_t t = 0; t < observed.length; ++t)
        for (std::size_t c : chans)
            if (!same_cell(observed.values[t * observed.channels + c], counterfactual.values[t * observed.channels + c])) {
                if (!d.first) d.first = t;
                d.last = t;
                d.channels.insert(c);
            }
    return d;
}

// Window-scan magnitude of one record: largest |observed| over the window
// divided by the mean counterfactual there, or the largest |observed| alone
// when that mean is zero.
inline double scan_magnitude(const TimeSeries& observed, const TimeSeries& counterfactual, const AnomalyRecord& r) {
    double total = 0.0;
    double count = 0.0;
    double peak = 0.0;
    bool seen = false;
    for (std::size_t t = r.start_idx; t < r.end_idx; ++t)
        for (std::size_t c : r.channels) {
            const double cf = counterfactual.values[t * counterfactual.channels + c];
            const double ob = observed.values[t * observed.channels + c];
            if (!std::isnan(cf)) {
                total += cf;
                count += 1.0;
            }
            if (!std::isnan(ob)) {
                peak = std::max(peak, std::fabs(ob));
                seen = true;
            }
        }
    if (count == 0.0 || !seen) throw IntegrityError("record window holds no observed values");
    const double mean = total / count;
    if (mean == 0.0) return peak;
    return peak / std::fabs(mean);
}

struct OracleSeries {
    const TimeSeries* observed = nullptr;
    const TimeSeries* counterfactual = nullptr;
    const AnswerKey* key = nullptr;
};

namespace oracle_detail {

[[noreturn]] inline void fail(const Question& q, const std::string& why) {
    throw IntegrityError("question " + q.question_id + ": " + why);
}

// Data and key must tell the same story.
inline DiffScan checked_scan(const Question& q, const OracleSeries& s) {
    const DiffScan d = scan_diff(*s.observed, *s.counterfactual);
    const auto& recs = s.key->records;
    if (d.any() != !recs.empty()) fail(q, "answer key and series data disagree on anomaly presence");
    if (!d.any()) return d;
    std::size_t lo = recs[0].start_idx, hi = recs[0].end_idx;
    std::set<std::size_t> key_channels;
    for (const auto& r : recs) {
        lo = std::min(lo, r.start_idx);
        hi = std::max(hi, r.end_idx);
        key_channels.insert(r.channels.begin(), r.channels.end());
    }
    if (*d.first != lo || *d.last + 1 != hi) fail(q, "answer-key window disagrees with the injected data");
    if (d.channels != key_channels) fail(q, "answer-key channels disagree with the injected data");
    return d;
}

inline std::vector<std::string> split_channels(const std::string& option) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = option.find("; ", pos);
        out.push_back(option.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline std::size_t index_of(const Question& q, const std::string& text) {
    for (std::size_t i = 0; i < q.options.size(); ++i)
        if (q.options[i] == text) return i;
    fail(q, "re-derived answer '" + text + "' is not among the options");
}

inline std::size_t nearest_time_option(const Question& q, const TimeSeries& s, std::size_t idx) {
    const UnixSeconds target = s.start_time + static_cast<UnixSeconds>(idx) * s.step;
    std::optional<std::size_t> best;
    UnixSeconds best_d = 0;
    bool tie = false;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
        const auto t = try_parse_option_time(q.options[i]);
        if (!t) continue;
        const UnixSeconds d = *t > target ? *t - target : target - *t;
        if (!best || d < best_d) {
            best = i;
            best_d = d;
            tie = false;
        } else if (d == best_d) {
            tie = true;
        }
    }
    if (!best) fail(q, "no timestamp options");
    if (tie) fail(q, "two timestamp options are equally close to the true time");
    return *best;
}

inline std::string category_text(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::TransientSpike: return "Transient Spike";
        case AnomalyKind::SeasonalityChange: return "Change in Seasonality";
        case AnomalyKind::VarianceChange: return "Change in Variance";
        case AnomalyKind::TrendChange: return "Change in Trend";
        case AnomalyKind::LevelShift:
        case AnomalyKind::Flatline: return "Level Shift";
    }
    return "Level Shift";
}

inline const AnomalyRecord& dominant(const OracleSeries& s) {
    const AnomalyRecord* best = nullptr;
    double best_m = -1.0;
    for (const auto& r : s.key->records) {
        const double m = scan_magnitude(*s.observed, *s.counterfactual, r);
        if (m > best_m) {
            best_m = m;
            best = &r;
        }
    }
    return *best;
}

inline const AnomalyRecord* event_record(const AnswerKey& k) {
    for (const auto& r : k.records)
        if (r.event_id) return &r;
    return nullptr;
}

}  // namespace oracle_detail

// Re-derived correct option index for `q`. Throws IntegrityError when the
// result disagrees with the stored index or the key disagrees with the data.
inline std::size_t oracle_answer(const Question& q, const std::vector<OracleSeries>& series) {
    using namespace oracle_detail;
    const std::size_t need = q.tier == Tier::III ? 2 : 1;
    if (series.size() != need) fail(q, "wrong number of series supplied to the oracle");
    const OracleSeries& s = series[0];
    std::size_t idx = 0;
    switch (q.category) {
        case Category::Presence: {
            idx = index_of(q, checked_scan(q, s).any() ? "Yes" : "No");
            break;
        }
        case Category::Identification: {
            const DiffScan d = checked_scan(q, s);
            std::vector<std::string> shown;
            for (const auto& o : q.options)
                if (o != "No Anomaly" && split_channels(o).size() == 3) shown = split_channels(o);
            if (shown.size() != 3) fail(q, "identification question lacks a three-channel option");
            std::vector<std::string> truth;
            for (const auto& name : shown) {
                const auto c = s.observed->channel_index(name);
                if (!c) fail(q, "option names an unknown channel '" + name + "'");
                if (d.channels.count(*c)) truth.push_back(name);
            }
            if (truth.empty()) {
                idx = index_of(q, "No Anomaly");
            } else {
                std::optional<std::size_t> hit;
                for (std::size_t i = 0; i < q.options.size(); ++i)
                    if (q.options[i] != "No Anomaly" && split_channels(q.options[i]) == truth) hit = i;
                if (!hit) fail(q, "the anomalous channel combination is not offered");
                idx = *hit;
            }
            break;
        }
        case Category::StartTime: {
            const DiffScan d = checked_scan(q, s);
            if (!d.any()) idx = index_of(q, "No Anomaly");
            else if (*d.first == 0) idx = index_of(q, "Before the earliest timestamp");
            else idx = nearest_time_option(q, *s.observed, *d.first);
            break;
        }
        case Category::EndTime: {
            const DiffScan d = checked_scan(q, s);
            if (!d.any()) idx = index_of(q, "No Anomaly");
            else if (*d.last + 1 == s.observed->length) idx = index_of(q, "Not resolved");
            else idx = nearest_time_option(q, *s.observed, *d.last);
            break;
        }
        case Category::Magnitude: {
            checked_scan(q, s);
            if (s.key->records.empty()) {
                idx = index_of(q, "No Anomaly");
                break;
            }
            double m = 0.0;
            for (const auto& r : s.key->records) m = std::max(m, scan_magnitude(*s.observed, *s.counterfactual, r));
            const double lm = std::log(std::max(m, 1e-12));
            std::optional<std::size_t> best;
            double best_d = 0.0;
            for (std::size_t i = 0; i < q.options.size(); ++i) {
                const auto v = io::parse_double(q.options[i]);
                if (!v) continue;
                const double dist = std::fabs(std::log(*v) - lm);
                if (!best || dist < best_d) {
                    best = i;
                    best_d = dist;
                }
            }
            if (!best) fail(q, "no numeric magnitude options");
            idx = *best;
            break;
        }
        case Category::Categorization: {
            checked_scan(q, s);
            idx = index_of(q, s.key->records.empty() ? std::string("No Anomaly") : category_text(dominant(s).kind));
            break;
        }
        case Category::Correlation:
        case Category::Indicator: {
            const OracleSeries& s2 = series[1];
            const bool a1 = checked_scan(q, s).any();
            const bool a2 = checked_scan(q, s2).any();
            const AnomalyRecord* e1 = event_record(*s.key);
            const AnomalyRecord* e2 = event_record(*s2.key);
            const bool shared = a1 && a2 && e1 && e2 && e1->event_id == e2->event_id;
            if (q.category == Category::Correlation) {
                if (!a1 && !a2) idx = index_of(q, "No, there is no anomaly in either time-series");
                else if (a1 && !a2) idx = index_of(q, "No, there is an anomaly only in time-series 1");
                else if (!a1 && a2) idx = index_of(q, "No, there is an anomaly only in time-series 2");
                else if (shared) idx = index_of(q, "Yes, there is an anomaly in both and they are correlated");
                else idx = index_of(q, "No, there is an anomaly in both but they are not correlated");
                break;
            }
            const std::string prefix = "The anomaly in time-series 1 is ";
            const std::string suffix = " the anomaly in time-series 2";
            if (!a1 || !a2) {
                idx = index_of(q, "No Anomaly in one or both series");
            } else if (!shared) {
                idx = index_of(q, prefix + "not correlated to" + suffix);
            } else {
                // Window starts measured on the data, in absolute time.
                const auto d1 = scan_diff(*s.observed, *s.counterfactual, &e1->channels);
                const auto d2 = scan_diff(*s2.observed, *s2.counterfactual, &e2->channels);
                const UnixSeconds t1 = s.observed->start_time + static_cast<UnixSeconds>(*d1.first) * s.observed->step;
                const UnixSeconds t2 = s2.observed->start_time + static_cast<UnixSeconds>(*d2.first) * s2.observed->step;
                if (s.observed->step != s2.observed->step) fail(q, "event members have different steps");
                if ((t2 - t1) != (e2->lag_steps - e1->lag_steps) * s.observed->step)
                    fail(q, "injected window offset disagrees with the declared lags");
                if (t1 < t2) idx = index_of(q, prefix + "a leading indicator of" + suffix);
                else if (t1 > t2) idx = index_of(q, prefix + "a lagging indicator of" + suffix);
                else idx = index_of(q, prefix + "perfectly correlated to" + suffix);
            }
            break;
        }
    }
    if (idx != q.correct_index)
        fail(q, "re-derived answer '" + q.options[idx] + "' differs from stored answer '" + q.options.at(q.correct_index) + "'");
    return idx;
}

// Loads keys and counterfactuals from a benchmark directory on demand. Only
// this class opens files under keys/.
class KeyStore {
public:
    explicit KeyStore(io::fs::path root) : root_(std::move(root)), observed_(root_) {}

    OracleSeries get(const std::string& id) {
        std::lock_guard lock(m_);
        auto& e = entries_[id];
        if (!e.key) {
            try {
                e.key = std::make_shared<AnswerKey>(
                    answer_key_from_json(nlohmann::json::parse(io::read_file(layout::key_path(root_, id)))));
            } catch (const nlohmann::json::exception& ex) {
                throw IntegrityError("unreadable answer key for " + id + ": " + ex.what());
            } catch (const SchemaError& ex) {
                throw IntegrityError("invalid answer key for " + id + ": " + ex.what());
            }
            e.counterfactual =
                std::make_shared<TimeSeries>(load_series_csv(layout::counterfactual_path(root_, id), id));
            e.observed = observed_.get(id);
        }
        return {e.observed.get(), e.counterfactual.get(), e.key.get()};
    }

private:
    struct Entry {
        std::shared_ptr<const TimeSeries> observed;
        std::shared_ptr<TimeSeries> counterfactual;
        std::shared_ptr<AnswerKey> key;
    };
    io::fs::path root_;
    layout::SeriesCache observed_;
    std::mutex m_;
    std::map<std::string, Entry> entries_;
};

}  // namespace arf::baselines
