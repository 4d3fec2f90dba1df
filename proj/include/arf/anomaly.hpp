#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "arf/core/error.hpp"
#include "arf/core/rng.hpp"
#include "arf/series_synth.hpp"
#include "arf/time_series.hpp"

namespace arf {

// Absence of a record encodes "no anomaly".
enum class AnomalyKind { LevelShift, TransientSpike, SeasonalityChange, VarianceChange, TrendChange, Flatline };

inline constexpr std::array kAllAnomalyKinds{AnomalyKind::LevelShift,     AnomalyKind::TransientSpike,
                                             AnomalyKind::SeasonalityChange, AnomalyKind::VarianceChange,
                                             AnomalyKind::TrendChange,    AnomalyKind::Flatline};

inline std::string_view to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::LevelShift: return "level_shift";
        case AnomalyKind::TransientSpike: return "transient_spike";
        case AnomalyKind::SeasonalityChange: return "seasonality_change";
        case AnomalyKind::VarianceChange: return "variance_change";
        case AnomalyKind::TrendChange: return "trend_change";
        case AnomalyKind::Flatline: return "flatline";
    }
    return "unknown";
}

inline AnomalyKind anomaly_kind_from_string(std::string_view s) {
    for (auto k : kAllAnomalyKinds)
        if (to_string(k) == s) return k;
    throw SchemaError("unknown anomaly kind: " + std::string(s));
}

enum class FlatlineFill { Constant, Missing };

struct AnomalyRecord {
    AnomalyKind kind = AnomalyKind::LevelShift;
    std::vector<std::size_t> channels;
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;  // exclusive; == T means unresolved
    bool began_before_window = false;
    double magnitude_factor = 1.0;
    std::optional<std::string> event_id;
    std::int64_t lag_steps = 0;
    std::uint64_t noise_seed = 0;  // VarianceChange noise
    FlatlineFill flatline_fill = FlatlineFill::Constant;

    std::size_t window() const noexcept { return end_idx - start_idx; }
    bool unresolved(std::size_t length) const noexcept { return end_idx == length; }
    bool overlaps(const AnomalyRecord& o) const noexcept { return start_idx < o.end_idx && o.start_idx < end_idx; }
};

// Longest window a transient spike may span on a series of length T.
inline std::size_t max_spike_width(std::size_t length) noexcept { return std::max<std::size_t>(3, length / 200); }

struct EventMember {
    std::string series_id;
    std::int64_t lag_steps = 0;
};

struct IncidentEvent {
    std::string event_id;
    AnomalyKind root_kind = AnomalyKind::LevelShift;
    UnixSeconds reference_time = 0;
    std::size_t window = 0;
    std::vector<EventMember> members;

    const EventMember* member(std::string_view series_id) const {
        for (const auto& m : members)
            if (m.series_id == series_id) return &m;
        return nullptr;
    }
};

struct AnomalyConfig {
    double p_none = 0.2;
    double p_second_record = 0.3;
    std::size_t max_channels_per_record = 3;
    Range factor_range{0.5, 5.0};
    // Relative weights in kAllAnomalyKinds order.
    std::array<double, 6> kind_weights{1, 1, 1, 1, 1, 1};
    double p_began_before = 0.1;
    double p_unresolved = 0.1;
    Range sustained_window_frac{0.05, 0.3};
    double p_flatline_missing = 0.0;
    std::int64_t max_event_lag = 30;
    double p_zero_lag_event = 0.25;

    void validate() const {
        if (!factor_range.valid() || factor_range.lo <= 0.0) throw ConfigError("anomaly config: factor range must be positive");
        if (!sustained_window_frac.valid() || sustained_window_frac.lo <= 0.0 || sustained_window_frac.hi >= 1.0)
            throw ConfigError("anomaly config: invalid window fraction");
        for (double p : {p_none, p_second_record, p_began_before, p_unresolved, p_flatline_missing, p_zero_lag_event})
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("anomaly config: probability outside [0, 1]");
        double total = 0.0;
        for (double w : kind_weights) {
            if (!(w >= 0.0)) throw ConfigError("anomaly config: negative kind weight");
            total += w;
        }
        if (!(total > 0.0)) throw ConfigError("anomaly config: all kind weights are zero");
        if (max_channels_per_record == 0) throw ConfigError("anomaly config: max channels must be >= 1");
        if (max_event_lag < 0) throw ConfigError("anomaly config: negative max lag");
    }
};

namespace detail {

inline std::vector<std::size_t> seasonal_channels(const TimeSeries& s) {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < s.profile.size(); ++c)
        if (s.profile[c].has_seasonality()) out.push_back(c);
    return out;
}

// Flatline is disallowed on constant (zero-baseline) series, where it would
// leave no trace.
inline AnomalyKind sample_kind(const AnomalyConfig& cfg, bool seasonal_ok, bool flatline_ok, Rng& rng) {
    std::array<double, 6> w = cfg.kind_weights;
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if ((!seasonal_ok && kAllAnomalyKinds[i] == AnomalyKind::SeasonalityChange) ||
            (!flatline_ok && kAllAnomalyKinds[i] == AnomalyKind::Flatline))
            w[i] = 0.0;
        total += w[i];
    }
    if (!(total > 0.0)) return AnomalyKind::LevelShift;
    double u = rng.uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (u < w[i]) return kAllAnomalyKinds[i];
        u -= w[i];
    }
    return AnomalyKind::LevelShift;
}

inline bool is_constant_series(const TimeSeries& s) {
    if (!s.profile.empty())
        return std::all_of(s.profile.begin(), s.profile.end(), [](const ChannelProfile& p) {
            return p.noise_scale == 0.0 && !p.has_seasonality() && p.drift_slope == 0.0;
        });
    return std::all_of(s.values.begin(), s.values.end(), [&](double v) { return v == s.values.front(); });
}

inline std::vector<std::size_t> sample_channels(const std::vector<std::size_t>& pool, std::size_t max_count, Rng& rng) {
    std::vector<std::size_t> chosen = pool;
    rng.shuffle(chosen);
    const auto k = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(std::min(max_count, pool.size()))));
    chosen.resize(k);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

inline std::size_t sample_window_length(AnomalyKind kind, std::size_t T, const AnomalyConfig& cfg, Rng& rng) {
    if (kind == AnomalyKind::TransientSpike)
        return static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(max_spike_width(T))));
    const auto lo = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(cfg.sustained_window_frac.lo * double(T))));
    const auto hi = std::max(lo, static_cast<std::size_t>(std::floor(cfg.sustained_window_frac.hi * double(T))));
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
}

}  // namespace detail

// Draws 0-2 non-overlapping records with uniformly placed windows.
inline std::vector<AnomalyRecord> sample_plan(const TimeSeries& series, const AnomalyConfig& config, Rng& rng) {
    config.validate();
    std::vector<AnomalyRecord> plan;
    if (rng.bernoulli(config.p_none)) return plan;
    const std::size_t T = series.length;
    const auto seasonal = detail::seasonal_channels(series);
    const bool flatline_ok = !detail::is_constant_series(series);
    std::vector<std::size_t> all(series.channels);
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;

    const std::size_t count = rng.bernoulli(config.p_second_record) ? 2 : 1;
    for (std::size_t n = 0; n < count; ++n) {
        for (int attempt = 0; attempt < 50; ++attempt) {
            AnomalyRecord r;
            r.kind = detail::sample_kind(config, !seasonal.empty(), flatline_ok, rng);
            r.channels = detail::sample_channels(r.kind == AnomalyKind::SeasonalityChange ? seasonal : all,
                                                 config.max_channels_per_record, rng);
            r.magnitude_factor = rng.uniform(config.factor_range.lo, config.factor_range.hi);
            r.noise_seed = rng.next();
            if (r.kind == AnomalyKind::Flatline && rng.bernoulli(config.p_flatline_missing))
                r.flatline_fill = FlatlineFill::Missing;
            const std::size_t len = detail::sample_window_length(r.kind, T, config, rng);
            const bool spike = r.kind == AnomalyKind::TransientSpike;
            if (!spike && rng.bernoulli(config.p_began_before)) {
                r.start_idx = 0;
                r.end_idx = len;
                r.began_before_window = true;
            } else if (!spike && rng.bernoulli(config.p_unresolved)) {
                r.start_idx = T - len;
                r.end_idx = T;
            } else {
                // Interior window: 1 <= start, end <= T - 1.
                r.start_idx = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(T - len - 1)));
                r.end_idx = r.start_idx + len;
            }
            const bool clash = std::any_of(plan.begin(), plan.end(), [&](const AnomalyRecord& o) { return o.overlaps(r); });
            if (clash) continue;
            plan.push_back(std::move(r));
            break;
        }
    }
    return plan;
}

namespace detail {

// Reference amplitude: the channel's largest absolute pre-injection value, or
// 1 for an identically-zero channel.
inline double channel_reference(const TimeSeries& s, std::size_t c) {
    double ref = 0.0;
    for (std::size_t t = 0; t < s.length; ++t) {
        const double v = s.at(t, c);
        if (!is_missing(v)) ref = std::max(ref, std::abs(v));
    }
    return ref > 0.0 ? ref : 1.0;
}

inline void check_record(const TimeSeries& s, const AnomalyRecord& r) {
    if (r.channels.empty()) throw InjectionError("record has no channels");
    if (!(r.start_idx < r.end_idx && r.end_idx <= s.length))
        throw InjectionError("record window [" + std::to_string(r.start_idx) + ", " + std::to_string(r.end_idx) +
                             ") out of bounds for length " + std::to_string(s.length));
    for (auto c : r.channels)
        if (c >= s.channels) throw InjectionError("record channel " + std::to_string(c) + " out of range");
    if (!(r.magnitude_factor > 0.0) || !std::isfinite(r.magnitude_factor))
        throw InjectionError("magnitude factor must be positive");
    if (r.kind == AnomalyKind::SeasonalityChange)
        for (auto c : r.channels)
            if (c >= s.profile.size() || !s.profile[c].has_seasonality())
                throw InjectionError("seasonality change on a channel without a seasonal component");
}

}  // namespace detail

// Returns a modified copy. Cells outside (window x channels) of every record
// are bit-identical to the input.
inline TimeSeries inject(const TimeSeries& series, const std::vector<AnomalyRecord>& records) {
    for (const auto& r : records) detail::check_record(series, r);
    TimeSeries out = series;
    for (const auto& r : records) {
        const double len = static_cast<double>(r.window());
        for (std::size_t c : r.channels) {
            const double amp = r.magnitude_factor * detail::channel_reference(series, c);
            Rng noise(mix_seed(r.noise_seed, c));
            switch (r.kind) {
                case AnomalyKind::LevelShift:
                case AnomalyKind::TransientSpike:
                    for (std::size_t t = r.start_idx; t < r.end_idx; ++t) out.at(t, c) += amp;
                    break;
                case AnomalyKind::TrendChange:
                    for (std::size_t t = r.start_idx; t < r.end_idx; ++t)
                        out.at(t, c) += amp * static_cast<double>(t - r.start_idx + 1) / len;
                    break;
                case AnomalyKind::VarianceChange:
                    for (std::size_t t = r.start_idx; t < r.end_idx; ++t) out.at(t, c) += 0.25 * amp * noise.normal();
                    break;
                case AnomalyKind::SeasonalityChange: {
                    // Same amplitude, period shortened by (1 + factor), phase
                    // continuous half a step before the window.
                    const ChannelProfile& p = series.profile[c];
                    const double two_pi = 2.0 * std::numbers::pi;
                    const double new_period = p.seasonal_period / (1.0 + r.magnitude_factor);
                    const double t0 = static_cast<double>(r.start_idx) - 0.5;
                    const double new_phase = two_pi * t0 / p.seasonal_period + p.seasonal_phase - two_pi * t0 / new_period;
                    for (std::size_t t = r.start_idx; t < r.end_idx; ++t) {
                        const double td = static_cast<double>(t);
                        out.at(t, c) += p.seasonal_amplitude * (std::sin(two_pi * td / new_period + new_phase) -
                                                                std::sin(two_pi * td / p.seasonal_period + p.seasonal_phase));
                    }
                    break;
                }
                case AnomalyKind::Flatline: {
                    // Holds the last value before the window; a flatline that
                    // began before the window holds the first value after it.
                    const double frozen = r.flatline_fill == FlatlineFill::Missing ? kMissing
                                          : r.start_idx > 0 ? series.at(r.start_idx - 1, c)
                                                            : series.at(std::min(r.end_idx, series.length - 1), c);
                    for (std::size_t t = r.start_idx; t < r.end_idx; ++t) out.at(t, c) = frozen;
                    break;
                }
            }
        }
    }
    return out;
}

// Largest ratio of anomalous values to the mean counterfactual over the
// record window; the largest absolute anomalous value when that mean is 0.
inline double compute_magnitude(const TimeSeries& pre, const TimeSeries& post, const AnomalyRecord& record) {
    if (!pre.same_shape(post)) throw ContractViolation("compute_magnitude: shape mismatch");
    if (record.end_idx <= record.start_idx || record.channels.empty())
        throw ContractViolation("compute_magnitude: empty window");
    if (record.end_idx > pre.length) throw ContractViolation("compute_magnitude: window out of bounds");
    double sum = 0.0;
    std::size_t n_pre = 0;
    double peak = 0.0;
    std::size_t n_post = 0;
    for (std::size_t c : record.channels) {
        if (c >= pre.channels) throw ContractViolation("compute_magnitude: channel out of range");
        for (std::size_t t = record.start_idx; t < record.end_idx; ++t) {
            const double a = pre.at(t, c);
            const double b = post.at(t, c);
            if (!is_missing(a)) {
                sum += a;
                ++n_pre;
            }
            if (!is_missing(b)) {
                peak = std::max(peak, std::abs(b));
                ++n_post;
            }
        }
    }
    if (n_pre == 0 || n_post == 0) throw ContractViolation("compute_magnitude: window has no observed values");
    const double mean = sum / static_cast<double>(n_pre);
    return mean != 0.0 ? peak / std::abs(mean) : peak;
}

// Places one anomaly per member at a shared reference time shifted by each
// member's lag. Members must share a step and overlap in absolute time.
inline std::pair<IncidentEvent, std::vector<AnomalyRecord>> make_incident_event(
    const std::vector<const TimeSeries*>& group, AnomalyKind root_kind, const std::vector<std::int64_t>& lags,
    std::string event_id, Rng& rng, const AnomalyConfig& config = {}) {
    if (group.size() < 2) throw EventError("incident event needs at least two series");
    if (lags.size() != group.size()) throw EventError("one lag per member required");
    const std::int64_t step = group[0]->step;
    UnixSeconds lo = group[0]->start_time;
    UnixSeconds hi = group[0]->end_time();
    std::size_t min_len = group[0]->length;
    for (const TimeSeries* s : group) {
        if (s->step != step) throw EventError("event members must share a sampling step");
        if ((s->start_time - group[0]->start_time) % step != 0) throw EventError("event members are not grid-aligned");
        lo = std::max(lo, s->start_time);
        hi = std::min(hi, s->end_time());
        min_len = std::min(min_len, s->length);
        if (root_kind == AnomalyKind::SeasonalityChange && detail::seasonal_channels(*s).empty())
            throw EventError("seasonality event on a member without seasonality");
    }
    if (lo > hi) throw EventError("event members have non-overlapping time ranges");

    // Reference index k on the grid of group[0]; member i's window starts at
    // (k*step + origin - start_i)/step + lag_i.
    const UnixSeconds origin = group[0]->start_time;
    std::size_t window = detail::sample_window_length(root_kind, min_len, config, rng);
    for (;;) {
        std::int64_t k_lo = (lo - origin) / step;
        std::int64_t k_hi = (hi - origin) / step;
        for (std::size_t i = 0; i < group.size(); ++i) {
            const std::int64_t off = (group[i]->start_time - origin) / step;
            const auto T = static_cast<std::int64_t>(group[i]->length);
            // 1 <= k - off + lag, k - off + lag + window <= T - 1
            k_lo = std::max(k_lo, 1 + off - lags[i]);
            k_hi = std::min(k_hi, T - 1 - static_cast<std::int64_t>(window) + off - lags[i]);
        }
        if (k_lo <= k_hi) {
            const std::int64_t k = rng.uniform_int(k_lo, k_hi);
            IncidentEvent ev;
            ev.event_id = std::move(event_id);
            ev.root_kind = root_kind;
            ev.reference_time = origin + k * step;
            ev.window = window;
            std::vector<AnomalyRecord> records;
            for (std::size_t i = 0; i < group.size(); ++i) {
                const TimeSeries& s = *group[i];
                const std::int64_t off = (s.start_time - origin) / step;
                AnomalyRecord r;
                r.kind = root_kind;
                std::vector<std::size_t> pool;
                if (root_kind == AnomalyKind::SeasonalityChange) {
                    pool = detail::seasonal_channels(s);
                } else {
                    for (std::size_t c = 0; c < s.channels; ++c) pool.push_back(c);
                }
                r.channels = detail::sample_channels(pool, config.max_channels_per_record, rng);
                r.start_idx = static_cast<std::size_t>(k - off + lags[i]);
                r.end_idx = r.start_idx + window;
                r.magnitude_factor = rng.uniform(config.factor_range.lo, config.factor_range.hi);
                r.noise_seed = rng.next();
                r.event_id = ev.event_id;
                r.lag_steps = lags[i];
                ev.members.push_back({s.series_id, lags[i]});
                records.push_back(std::move(r));
            }
            return {std::move(ev), std::move(records)};
        }
        if (window <= 1) break;
        window = std::max<std::size_t>(1, window / 2);
    }
    throw EventError("lags too large for the overlapping time range");
}

// JSON (answer-key sidecar) ------------------------------------------------

inline nlohmann::json to_json(const AnomalyRecord& r) {
    nlohmann::json j{{"kind", to_string(r.kind)},
                     {"channels", r.channels},
                     {"start_idx", r.start_idx},
                     {"end_idx", r.end_idx},
                     {"began_before_window", r.began_before_window},
                     {"magnitude_factor", r.magnitude_factor},
                     {"lag_steps", r.lag_steps},
                     {"noise_seed", r.noise_seed},
                     {"flatline_fill", r.flatline_fill == FlatlineFill::Missing ? "missing" : "constant"}};
    j["event_id"] = r.event_id ? nlohmann::json(*r.event_id) : nlohmann::json(nullptr);
    return j;
}

inline AnomalyRecord record_from_json(const nlohmann::json& j) {
    try {
        AnomalyRecord r;
        r.kind = anomaly_kind_from_string(j.at("kind").get<std::string>());
        r.channels = j.at("channels").get<std::vector<std::size_t>>();
        r.start_idx = j.at("start_idx").get<std::size_t>();
        r.end_idx = j.at("end_idx").get<std::size_t>();
        r.began_before_window = j.at("began_before_window").get<bool>();
        r.magnitude_factor = j.at("magnitude_factor").get<double>();
        r.lag_steps = j.value("lag_steps", std::int64_t{0});
        r.noise_seed = j.value("noise_seed", std::uint64_t{0});
        r.flatline_fill = j.value("flatline_fill", std::string("constant")) == "missing" ? FlatlineFill::Missing
                                                                                        : FlatlineFill::Constant;
        if (j.contains("event_id") && !j["event_id"].is_null()) r.event_id = j["event_id"].get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed anomaly record: ") + e.what());
    }
}

inline nlohmann::json to_json(const IncidentEvent& e) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : e.members) members.push_back({{"series_id", m.series_id}, {"lag_steps", m.lag_steps}});
    return {{"event_id", e.event_id},
            {"root_kind", to_string(e.root_kind)},
            {"reference_time", e.reference_time},
            {"window", e.window},
            {"members", members}};
}

inline IncidentEvent event_from_json(const nlohmann::json& j) {
    try {
        IncidentEvent e;
        e.event_id = j.at("event_id").get<std::string>();
        e.root_kind = anomaly_kind_from_string(j.at("root_kind").get<std::string>());
        e.reference_time = j.at("reference_time").get<UnixSeconds>();
        e.window = j.at("window").get<std::size_t>();
        for (const auto& m : j.at("members"))
            e.members.push_back({m.at("series_id").get<std::string>(), m.at("lag_steps").get<std::int64_t>()});
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(std::string("malformed incident event: ") + ex.what());
    }
}

inline constexpr int kAnswerKeySchemaVersion = 1;

// Per-series answer key: never shown to evaluated models.
struct AnswerKey {
    std::string series_id;
    std::string incident_group;
    std::vector<AnomalyRecord> records;
    std::vector<IncidentEvent> events;  // events this series belongs to

    bool empty() const noexcept { return records.empty(); }
};

inline nlohmann::json to_json(const AnswerKey& k) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : k.records) recs.push_back(to_json(r));
    nlohmann::json evs = nlohmann::json::array();
    for (const auto& e : k.events) evs.push_back(to_json(e));
    return {{"schema_version", kAnswerKeySchemaVersion},
            {"series_id", k.series_id},
            {"incident_group", k.incident_group},
            {"records", recs},
            {"events", evs}};
}

inline AnswerKey answer_key_from_json(const nlohmann::json& j) {
    if (j.value("schema_version", 0) != kAnswerKeySchemaVersion) throw SchemaError("unsupported answer-key schema version");
    AnswerKey k;
    k.series_id = j.at("series_id").get<std::string>();
    k.incident_group = j.value("incident_group", std::string{});
    for (const auto& r : j.at("records")) k.records.push_back(record_from_json(r));
    for (const auto& e : j.at("events")) k.events.push_back(event_from_json(e));
    return k;
}

}  // namespace arf
