#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "arf/core/io.hpp"
#include "arf/core/time.hpp"
#include "arf/question.hpp"
#include "arf/time_series.hpp"

namespace arf::baselines {

struct ZScoreConfig {
    double tau = 6.0;         // |z| threshold
    std::size_t min_run = 3;  // w: consecutive flagged points
    std::size_t min_window = 50;
    std::size_t window_divisor = 20;  // W = max(min_window, T / divisor)
    std::size_t flatline_run = 5;     // equal consecutive values
};

struct Detection {
    std::size_t start = 0;  // inclusive
    std::size_t end = 0;    // exclusive
    std::size_t channel = 0;
    bool flatline = false;
    double peak_abs = 0.0;
    double baseline = 0.0;  // reference median at detection start
    double sign_balance = 0.0;  // |sum sign(z)| / n over the run
};

namespace zdetail {

inline double median_of(std::vector<double>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    const double hi = v[n / 2];
    if (n % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + n / 2);
    return 0.5 * (lo + hi);
}

inline double quantile_sorted(const std::vector<double>& s, double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? s[i] + f * (s[i + 1] - s[i]) : s[i];
}

struct RobustStats {
    double center = 0.0;
    double scale = 0.0;  // 0 when the reference is constant
};

// Median and MAD-based sigma, IQR/1.349 when the MAD collapses.
inline RobustStats robust_stats(std::vector<double> ref) {
    ref.erase(std::remove_if(ref.begin(), ref.end(), [](double v) { return std::isnan(v); }), ref.end());
    if (ref.empty()) return {};
    RobustStats st;
    std::vector<double> tmp = ref;
    st.center = median_of(tmp);
    std::vector<double> dev;
    dev.reserve(ref.size());
    for (double v : ref) dev.push_back(std::fabs(v - st.center));
    st.scale = 1.4826 * median_of(dev);
    if (st.scale == 0.0) {
        std::sort(ref.begin(), ref.end());
        st.scale = (quantile_sorted(ref, 0.75) - quantile_sorted(ref, 0.25)) / 1.349;
    }
    return st;
}

}  // namespace zdetail

// Trailing-window robust z-score per channel. The reference for index t is
// the W points before it (the first W points for t < W), refreshed every
// W/10 steps. Runs of >= min_run points with |z| > tau, and runs of equal or
// missing values, are reported.
inline std::vector<Detection> detect_channel(const std::vector<double>& x, std::size_t channel,
                                             const ZScoreConfig& cfg = {}) {
    std::vector<Detection> out;
    const std::size_t T = x.size();
    if (T == 0) return out;
    const std::size_t W = std::min(T, std::max(cfg.min_window, T / cfg.window_divisor));
    const std::size_t refresh = std::max<std::size_t>(1, W / 10);

    zdetail::RobustStats st;
    std::size_t stats_at = SIZE_MAX;
    std::size_t run_start = 0, run_len = 0;
    double run_peak = 0.0, run_sign = 0.0, run_base = 0.0;
    auto flush = [&](std::size_t end) {
        if (run_len >= cfg.min_run)
            out.push_back({run_start, end, channel, false, run_peak, run_base, std::fabs(run_sign) / run_len});
        run_len = 0;
    };
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t ref_lo = t < W ? 0 : t - W;
        const std::size_t ref_hi = t < W ? W : t;
        if (stats_at == SIZE_MAX || (t >= W && (t - stats_at) >= refresh) || (t == W)) {
            st = zdetail::robust_stats(std::vector<double>(x.begin() + ref_lo, x.begin() + ref_hi));
            stats_at = t;
        }
        const double v = x[t];
        bool flagged = false;
        double z = 0.0;
        if (!std::isnan(v)) {
            if (st.scale > 0.0) {
                z = (v - st.center) / st.scale;
                flagged = std::fabs(z) > cfg.tau;
            } else {
                z = v - st.center;
                flagged = v != st.center;
            }
        }
        if (flagged) {
            if (run_len == 0) {
                run_start = t;
                run_peak = 0.0;
                run_sign = 0.0;
                run_base = st.center;
            }
            ++run_len;
            run_peak = std::max(run_peak, std::fabs(v));
            run_sign += z > 0 ? 1.0 : -1.0;
        } else {
            flush(t);
        }
    }
    flush(T);

    // Flatline: a run of identical (or missing) values. A channel that is
    // constant throughout is not an anomaly.
    const std::size_t need = std::max(cfg.flatline_run, cfg.min_run);
    bool all_same = true;
    for (std::size_t t = 1; t < T && all_same; ++t)
        all_same = (std::isnan(x[t]) && std::isnan(x[0])) || x[t] == x[0];
    if (!all_same) {
        std::size_t s = 0;
        for (std::size_t t = 1; t <= T; ++t) {
            const bool same = t < T && ((std::isnan(x[t]) && std::isnan(x[t - 1])) || x[t] == x[t - 1]);
            if (!same) {
                if (t - s >= need) {
                    std::vector<double> ref(x.begin() + (s >= W ? s - W : 0), x.begin() + (s >= W ? s : std::min(T, W)));
                    const auto rs = zdetail::robust_stats(ref);
                    out.push_back({s, t, channel, true, std::isnan(x[s]) ? 0.0 : std::fabs(x[s]), rs.center, 1.0});
                }
                s = t;
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        return a.start != b.start ? a.start < b.start : a.channel < b.channel;
    });
    return out;
}

inline std::vector<Detection> detect(const TimeSeries& s, const ZScoreConfig& cfg = {}) {
    std::vector<Detection> all;
    for (std::size_t c = 0; c < s.channels; ++c) {
        auto d = detect_channel(s.channel(c), c, cfg);
        all.insert(all.end(), d.begin(), d.end());
    }
    std::sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
        return a.start != b.start ? a.start < b.start : a.channel < b.channel;
    });
    return all;
}

namespace zdetail {

inline std::optional<std::size_t> find(const Question& q, std::string_view text) { return q.option_index(text); }

inline std::size_t nearest_time(const Question& q, const TimeSeries& s, std::size_t idx) {
    const UnixSeconds target = s.time_at(idx);
    std::size_t best = 0;
    std::optional<UnixSeconds> best_d;
    for (std::size_t i = 0; i < q.options.size(); ++i)
        if (auto t = try_parse_option_time(q.options[i])) {
            const UnixSeconds d = *t > target ? *t - target : target - *t;
            if (!best_d || d < *best_d) {
                best = i;
                best_d = d;
            }
        }
    return best;
}

inline std::vector<std::string> split_names(const std::string& o) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto n = o.find(opt::kChannelSeparator, pos);
        out.push_back(o.substr(pos, n == std::string::npos ? std::string::npos : n - pos));
        if (n == std::string::npos) break;
        pos = n + opt::kChannelSeparator.size();
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace zdetail

// Category decision rules on top of the detections. Returns a canonical
// option index.
inline std::size_t zscore_answer(const Question& q, const std::vector<const TimeSeries*>& series,
                                 const ZScoreConfig& cfg = {}) {
    using zdetail::find;
    const TimeSeries& s = *series.at(0);
    const auto det = detect(s, cfg);
    const auto none = find(q, opt::kNoAnomaly);
    switch (q.category) {
        case Category::Presence: return *find(q, det.empty() ? opt::kNo : opt::kYes);
        case Category::Identification: {
            if (det.empty()) return *none;
            std::vector<std::string> flagged;
            for (const auto& d : det) flagged.push_back(s.channel_names[d.channel]);
            std::sort(flagged.begin(), flagged.end());
            flagged.erase(std::unique(flagged.begin(), flagged.end()), flagged.end());
            // Best Jaccard match among offered channel sets.
            std::size_t best = *none;
            double best_j = 0.0;
            for (std::size_t i = 0; i < q.options.size(); ++i) {
                if (q.options[i] == opt::kNoAnomaly) continue;
                const auto names = zdetail::split_names(q.options[i]);
                std::size_t inter = 0;
                for (const auto& n : names) inter += std::binary_search(flagged.begin(), flagged.end(), n);
                std::vector<std::string> uni;
                std::set_union(names.begin(), names.end(), flagged.begin(), flagged.end(), std::back_inserter(uni));
                const double j = uni.empty() ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni.size());
                if (j > best_j) {
                    best_j = j;
                    best = i;
                }
            }
            return best;
        }
        case Category::StartTime: {
            if (det.empty()) return *none;
            const std::size_t first = det.front().start;
            if (first == 0) return *find(q, opt::kBeforeEarliest);
            return zdetail::nearest_time(q, s, first);
        }
        case Category::EndTime: {
            if (det.empty()) return *none;
            std::size_t last = 0;
            for (const auto& d : det) last = std::max(last, d.end - 1);
            if (last + 1 == s.length) return *find(q, opt::kNotResolved);
            return zdetail::nearest_time(q, s, last);
        }
        case Category::Magnitude: {
            if (det.empty()) return *none;
            double m = 0.0;
            for (const auto& d : det) {
                const double ratio = d.baseline != 0.0 ? d.peak_abs / std::fabs(d.baseline) : d.peak_abs;
                m = std::max(m, ratio);
            }
            std::size_t best = *none;
            double best_d = 0.0;
            bool have = false;
            for (std::size_t i = 0; i < q.options.size(); ++i)
                if (auto v = io::parse_double(q.options[i])) {
                    const double dist = std::fabs(std::log(*v) - std::log(std::max(m, 1e-12)));
                    if (!have || dist < best_d) {
                        best = i;
                        best_d = dist;
                        have = true;
                    }
                }
            return best;
        }
        case Category::Categorization: {
            if (det.empty()) return *none;
            const Detection* longest = &det.front();
            for (const auto& d : det)
                if (d.end - d.start > longest->end - longest->start) longest = &d;
            const std::size_t spike = std::max<std::size_t>(3, s.length / 200);
            if (longest->flatline) return *find(q, opt::kLevelShift);
            if (longest->end - longest->start <= spike) return *find(q, opt::kTransientSpike);
            if (longest->sign_balance < 0.5) {
                if (auto v = find(q, opt::kVariance)) return *v;
                return *find(q, opt::kSeasonality);
            }
            return *find(q, opt::kLevelShift);
        }
        case Category::Correlation:
        case Category::Indicator: {
            const TimeSeries& s2 = *series.at(1);
            const auto det2 = detect(s2, cfg);
            const bool a1 = !det.empty(), a2 = !det2.empty();
            // Flagged ranges overlap in absolute time.
            bool overlap = false;
            UnixSeconds t1 = 0, t2 = 0;
            if (a1 && a2) {
                t1 = s.time_at(det.front().start);
                t2 = s2.time_at(det2.front().start);
                for (const auto& x : det)
                    for (const auto& y : det2)
                        if (s.time_at(x.start) <= s2.time_at(y.end - 1) && s2.time_at(y.start) <= s.time_at(x.end - 1))
                            overlap = true;
            }
            if (q.category == Category::Correlation) {
                if (!a1 && !a2) return opt::kCorrNeither;
                if (a1 && !a2) return opt::kCorrOnly1;
                if (!a1 && a2) return opt::kCorrOnly2;
                return overlap ? opt::kCorrYes : opt::kCorrNotCorrelated;
            }
            if (!a1 || !a2) return opt::kIndNoAnomaly;
            if (!overlap) return opt::kIndNotCorrelated;
            return t1 < t2 ? opt::kIndLeading : t1 > t2 ? opt::kIndLagging : opt::kIndPerfect;
        }
    }
    return 0;
}

}  // namespace arf::baselines
