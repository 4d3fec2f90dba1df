#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/core/rng.hpp"
#include "arf/core/time.hpp"
#include "arf/time_series.hpp"

namespace arf {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool valid() const noexcept { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; }
    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

// Piecewise log-uniform distribution over series length.
struct LengthPiece {
    std::size_t lo;
    std::size_t hi;
    double weight;
};

struct LengthDistribution {
    // 40% of the mass sits in [1000, 10000].
    std::vector<LengthPiece> pieces{{240, 999, 0.35}, {1000, 10'000, 0.40}, {10'001, 50'000, 0.25}};

    void validate() const {
        if (pieces.empty()) throw ConfigError("length distribution has no pieces");
        double total = 0.0;
        for (const auto& p : pieces) {
            if (p.lo == 0 || p.lo > p.hi || !(p.weight >= 0.0))
                throw ConfigError("invalid length distribution piece");
            total += p.weight;
        }
        if (!(total > 0.0)) throw ConfigError("length distribution weights sum to zero");
    }

    std::size_t sample(Rng& rng) const {
        double total = 0.0;
        for (const auto& p : pieces) total += p.weight;
        double u = rng.uniform() * total;
        const LengthPiece* chosen = &pieces.back();
        for (const auto& p : pieces) {
            if (u < p.weight) {
                chosen = &p;
                break;
            }
            u -= p.weight;
        }
        const double x = rng.log_uniform(static_cast<double>(chosen->lo), static_cast<double>(chosen->hi) + 1.0);
        const auto n = static_cast<std::size_t>(std::floor(x));
        return std::clamp(n, chosen->lo, chosen->hi);
    }
};

// Log-uniform integer count of variates.
struct VariateDistribution {
    std::size_t lo = 1;
    std::size_t hi = 100;

    void validate() const {
        if (lo == 0 || lo > hi) throw ConfigError("invalid variate distribution");
    }

    std::size_t sample(Rng& rng) const {
        const double x = rng.log_uniform(static_cast<double>(lo), static_cast<double>(hi) + 1.0);
        return std::clamp(static_cast<std::size_t>(std::floor(x)), lo, hi);
    }
};

enum class MetricKind { Latency, ErrorCount, CpuUsage, MemoryUsage, RequestRate, QueueDepth, UnavailableReplicas };

inline constexpr std::array kAllMetricKinds{MetricKind::Latency,     MetricKind::ErrorCount,
                                            MetricKind::CpuUsage,    MetricKind::MemoryUsage,
                                            MetricKind::RequestRate, MetricKind::QueueDepth,
                                            MetricKind::UnavailableReplicas};

inline const std::vector<std::string>& metric_nouns(MetricKind kind) {
    static const std::vector<std::vector<std::string>> nouns{
        {"request latency", "p99 response latency", "database query latency"},
        {"HTTP 5xx error count", "failed job count", "error log volume"},
        {"CPU utilization", "container CPU usage", "CPU throttling time"},
        {"memory usage", "resident set size", "heap memory in use"},
        {"request rate", "ingested events per second", "API call throughput"},
        {"queue depth", "pending task backlog", "consumer lag"},
        {"unavailable replicas", "restarting pods", "OOM-killed containers"},
    };
    return nouns[static_cast<std::size_t>(kind)];
}

inline const std::vector<std::string>& caption_aggregations() {
    static const std::vector<std::string> v{"Average", "Sum of", "Maximum", "Minimum", "95th percentile of"};
    return v;
}

inline const std::vector<std::string>& caption_filters() {
    static const std::vector<std::string> v{"in a specific datacenter",
                                            "for selected services",
                                            "within the production environment",
                                            "in one Kubernetes namespace",
                                            "for a single tenant organization"};
    return v;
}

// Keys used for channel tags and the caption's group-by phrase.
inline const std::vector<std::string>& tag_keys() {
    static const std::vector<std::string> v{"pod",     "datacenter", "service", "shard", "org_id",
                                            "job_type", "cluster",   "region",  "host",  "availability_zone"};
    return v;
}

inline const std::vector<std::string>& default_caption_templates() {
    static const std::vector<std::string> v{
        "{agg} {metric} {filter}, grouped by {group_by}.",
        "{metric} ({agg}) {filter}, split by {group_by}.",
        "{agg} {metric} across {group_by} {filter}.",
    };
    return v;
}

struct SynthConfig {
    std::uint64_t seed = 0;
    LengthDistribution length_distribution{};
    VariateDistribution variate_distribution{};
    std::int64_t step_seconds = 60;
    UnixSeconds epoch = 1'740'787'200;  // 2025-03-01T00:00:00Z
    std::int64_t start_offset_days = 30;

    // Amplitudes, levels and drift are in units of the channel noise scale.
    double seasonal_probability = 0.6;
    Range seasonal_amplitude_range{0.5, 3.0};
    double seasonal_period_min = 20.0;       // steps
    double seasonal_period_max_frac = 0.5;   // of T
    double drift_probability = 0.5;
    Range drift_slope_range{-3.0, 3.0};      // total drift over the whole series
    Range noise_scale_range{0.1, 1000.0};    // log-uniform
    Range level_range{5.0, 20.0};
    // Probability that a series is an idle counter: identically zero before
    // injection (e.g. unavailable replicas).
    double zero_baseline_probability = 0.1;
    std::vector<std::string> caption_template_bank = default_caption_templates();
    SeriesLimits limits{};

    void validate() const {
        length_distribution.validate();
        variate_distribution.validate();
        for (const Range* r : {&seasonal_amplitude_range, &drift_slope_range, &noise_scale_range, &level_range})
            if (!r->valid()) throw ConfigError("synth config: empty or non-finite range");
        if (noise_scale_range.lo <= 0.0) throw ConfigError("synth config: noise scale must be positive");
        if (seasonal_amplitude_range.lo < 0.0) throw ConfigError("synth config: negative seasonal amplitude");
        if (step_seconds <= 0) throw ConfigError("synth config: step must be positive");
        if (seasonal_period_min < 2.0 || !(seasonal_period_max_frac > 0.0))
            throw ConfigError("synth config: invalid seasonal period bounds");
        for (double p : {seasonal_probability, drift_probability, zero_baseline_probability})
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synth config: probability outside [0, 1]");
        if (caption_template_bank.empty()) throw ConfigError("synth config: empty caption template bank");
        if (variate_distribution.hi > limits.max_channels) throw ConfigError("synth config: variate bound exceeds limit");
        for (const auto& p : length_distribution.pieces)
            if (p.lo < limits.min_length || p.hi > limits.max_length)
                throw ConfigError("synth config: length distribution exceeds limits");
    }
};

// Unique "key:value[,key:value]" tags.
inline std::vector<std::string> make_channel_names(std::size_t v_count, Rng& rng) {
    if (v_count == 0) throw ContractViolation("make_channel_names: v_count must be >= 1");
    const auto& keys = tag_keys();
    const std::string& primary = keys[rng.below(keys.size())];
    std::string secondary = keys[rng.below(keys.size())];
    while (secondary == primary) secondary = keys[rng.below(keys.size())];
    // Second tag varies over `inner` values; inner == 1 gives a constant second tag.
    const std::size_t inner = v_count == 1 ? 1 : static_cast<std::size_t>(rng.uniform_int(1, 4));
    const bool with_secondary = v_count > 1 && rng.bernoulli(0.7);
    std::vector<std::string> names;
    names.reserve(v_count);
    for (std::size_t n = 0; n < v_count; ++n) {
        std::string name;
        if (with_secondary) {
            name = primary + ":" + std::to_string(n / inner + 1) + "," + secondary + ":" + std::to_string(n % inner + 1);
        } else {
            name = primary + ":" + std::to_string(n + 1);
        }
        names.push_back(std::move(name));
    }
    return names;
}

namespace detail {
inline std::string replace_all(std::string text, std::string_view key, std::string_view value) {
    for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
        text.replace(pos, key.size(), value);
    return text;
}
}  // namespace detail

inline std::string make_caption(const std::vector<std::string>& template_bank, MetricKind metric_kind, Rng& rng) {
    if (template_bank.empty()) throw ConfigError("make_caption: empty template bank");
    const std::string& tmpl = template_bank[rng.below(template_bank.size())];
    const auto& nouns = metric_nouns(metric_kind);
    const auto& keys = tag_keys();
    const std::string& k1 = keys[rng.below(keys.size())];
    std::string k2 = keys[rng.below(keys.size())];
    while (k2 == k1) k2 = keys[rng.below(keys.size())];
    std::string out = tmpl;
    out = detail::replace_all(out, "{agg}", caption_aggregations()[rng.below(caption_aggregations().size())]);
    out = detail::replace_all(out, "{metric}", nouns[rng.below(nouns.size())]);
    out = detail::replace_all(out, "{filter}", caption_filters()[rng.below(caption_filters().size())]);
    out = detail::replace_all(out, "{group_by}", k1 + " and " + k2);
    if (!out.empty() && out[0] >= 'a' && out[0] <= 'z') out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

// Gaussian base per channel scaled by a log-uniform channel scale, plus an
// optional sinusoidal seasonal term and an optional linear drift.
inline TimeSeries generate_series(const SynthConfig& config, Rng& rng) {
    config.validate();
    TimeSeries s;
    s.length = config.length_distribution.sample(rng);
    s.channels = config.variate_distribution.sample(rng);
    s.step = config.step_seconds;
    s.start_time = config.epoch + rng.uniform_int(0, std::max<std::int64_t>(0, config.start_offset_days - 1)) * 86'400 +
                   rng.uniform_int(0, 23) * 3600;
    s.channel_names = make_channel_names(s.channels, rng);

    const bool zero_baseline = rng.bernoulli(config.zero_baseline_probability);
    MetricKind kind = zero_baseline ? MetricKind::UnavailableReplicas
                                    : kAllMetricKinds[rng.below(kAllMetricKinds.size() - 1)];
    s.caption = make_caption(config.caption_template_bank, kind, rng);

    const auto T = s.length;
    const auto V = s.channels;
    s.values.assign(T * V, 0.0);
    s.profile.assign(V, ChannelProfile{});
    if (zero_baseline) {
        for (auto& p : s.profile) p.noise_scale = 0.0;
        return s;
    }

    const double period_hi = std::max(config.seasonal_period_min, config.seasonal_period_max_frac * static_cast<double>(T));
    for (std::size_t c = 0; c < V; ++c) {
        ChannelProfile& p = s.profile[c];
        p.noise_scale = rng.log_uniform(config.noise_scale_range.lo, config.noise_scale_range.hi);
        p.level = p.noise_scale * rng.uniform(config.level_range.lo, config.level_range.hi);
        if (rng.bernoulli(config.seasonal_probability)) {
            p.seasonal_amplitude =
                p.noise_scale * rng.uniform(config.seasonal_amplitude_range.lo, config.seasonal_amplitude_range.hi);
            p.seasonal_period = rng.log_uniform(config.seasonal_period_min, period_hi);
            p.seasonal_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        if (rng.bernoulli(config.drift_probability)) {
            const double total = rng.uniform(config.drift_slope_range.lo, config.drift_slope_range.hi);
            p.drift_slope = p.noise_scale * total / static_cast<double>(T);
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < V; ++c) {
            const ChannelProfile& p = s.profile[c];
            double v = p.level + p.noise_scale * rng.normal();
            if (p.has_seasonality())
                v += p.seasonal_amplitude *
                     std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / p.seasonal_period + p.seasonal_phase);
            v += p.drift_slope * static_cast<double>(t);
            s.at(t, c) = v;
        }
    }
    return s;
}

}  // namespace arf
