#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"

#include "arf/anomaly.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/time.hpp"
#include "arf/qa_gen.hpp"
#include "arf/question.hpp"
#include "arf/series_synth.hpp"

namespace arf {

struct BenchmarkConfig {
    std::uint64_t seed = 0;
    std::map<Category, std::size_t> category_counts;
    std::size_t min_group_size = 2;
    std::size_t max_group_size = 6;
    double p_event = 0.8;              // groups carrying a shared incident event
    std::size_t questions_per_series = 3;
    std::size_t max_groups = 100'000;
    SynthConfig synth{};
    AnomalyConfig anomaly{};
    PairingConfig pairing{};

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& [_, k] : category_counts) n += k;
        return n;
    }

    std::size_t count(Category c) const {
        auto it = category_counts.find(c);
        return it == category_counts.end() ? 0 : it->second;
    }

    void validate() const {
        synth.validate();
        anomaly.validate();
        if (total() == 0) throw ConfigError("benchmark config requests no questions");
        if (min_group_size < 1 || min_group_size > max_group_size) throw ConfigError("invalid group size range");
        if (!(p_event >= 0.0 && p_event <= 1.0)) throw ConfigError("p_event outside [0, 1]");
        if (questions_per_series == 0) throw ConfigError("questions_per_series must be >= 1");
        if (!(pairing.negative_fraction >= 0.0)) throw ConfigError("negative_fraction must be >= 0");
        if ((count(Category::Correlation) || count(Category::Indicator)) && max_group_size < 2)
            throw ConfigError("Tier III questions need groups of at least two series");
    }
};

// Splits `total` as evenly as possible over all categories, earlier
// categories taking the remainder.
inline std::map<Category, std::size_t> equal_mix(std::size_t total) {
    std::map<Category, std::size_t> out;
    const std::size_t n = kAllCategories.size();
    for (std::size_t i = 0; i < n; ++i) out[kAllCategories[i]] = total / n + (i < total % n ? 1 : 0);
    return out;
}

namespace config_detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == k;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
}

inline Range range_of(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("ranges are written as [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

template <class T>
void read(const json& j, std::string_view key, T& out) {
    if (auto it = j.find(std::string(key)); it != j.end()) out = it->template get<T>();
}

inline void read_range(const json& j, std::string_view key, Range& out) {
    if (auto it = j.find(std::string(key)); it != j.end()) out = range_of(*it);
}

}  // namespace config_detail

inline nlohmann::json to_json(const BenchmarkConfig& c) {
    using config_detail::json;
    using config_detail::range_json;
    json counts = json::object();
    for (auto cat : kAllCategories) counts[std::string(to_string(cat))] = c.count(cat);
    json pieces = json::array();
    for (const auto& p : c.synth.length_distribution.pieces) pieces.push_back({p.lo, p.hi, p.weight});
    json weights = json::object();
    for (std::size_t i = 0; i < kAllAnomalyKinds.size(); ++i)
        weights[std::string(to_string(kAllAnomalyKinds[i]))] = c.anomaly.kind_weights[i];
    const auto& s = c.synth;
    const auto& a = c.anomaly;
    return {{"seed", c.seed},
            {"category_counts", counts},
            {"group_size", {c.min_group_size, c.max_group_size}},
            {"p_event", c.p_event},
            {"questions_per_series", c.questions_per_series},
            {"max_groups", c.max_groups},
            {"synth",
             {{"length_pieces", pieces},
              {"variates", {s.variate_distribution.lo, s.variate_distribution.hi}},
              {"step_seconds", s.step_seconds},
              {"epoch", s.epoch},
              {"start_offset_days", s.start_offset_days},
              {"seasonal_probability", s.seasonal_probability},
              {"seasonal_amplitude_range", range_json(s.seasonal_amplitude_range)},
              {"seasonal_period_min", s.seasonal_period_min},
              {"seasonal_period_max_frac", s.seasonal_period_max_frac},
              {"drift_probability", s.drift_probability},
              {"drift_range", range_json(s.drift_slope_range)},
              {"noise_scale_range", range_json(s.noise_scale_range)},
              {"level_range", range_json(s.level_range)},
              {"zero_baseline_probability", s.zero_baseline_probability},
              {"caption_templates", s.caption_template_bank}}},
            {"anomaly",
             {{"p_none", a.p_none},
              {"p_second_record", a.p_second_record},
              {"max_channels_per_record", a.max_channels_per_record},
              {"factor_range", range_json(a.factor_range)},
              {"kind_weights", weights},
              {"p_began_before", a.p_began_before},
              {"p_unresolved", a.p_unresolved},
              {"sustained_window_frac", range_json(a.sustained_window_frac)},
              {"p_flatline_missing", a.p_flatline_missing},
              {"max_event_lag", a.max_event_lag},
              {"p_zero_lag_event", a.p_zero_lag_event}}},
            {"pairing",
             {{"max_pairs_per_group", c.pairing.max_pairs_per_group},
              {"negative_fraction", c.pairing.negative_fraction}}}};
}

// Missing keys keep their defaults; "total_questions" gives an equal mix and
// "category_counts" overrides individual categories.
inline BenchmarkConfig config_from_json(const nlohmann::json& j) {
    using namespace config_detail;
    try {
        check_keys(j, {"seed", "total_questions", "category_counts", "group_size", "p_event", "questions_per_series",
                       "max_groups", "synth", "anomaly", "pairing"},
                   "config");
        BenchmarkConfig c;
        read(j, "seed", c.seed);
        std::size_t total = 750;
        read(j, "total_questions", total);
        c.category_counts = equal_mix(total);
        if (auto it = j.find("category_counts"); it != j.end()) {
            if (!j.contains("total_questions"))
                for (auto& [_, n] : c.category_counts) n = 0;
            if (!it->is_object()) throw ConfigError("category_counts must be an object");
            for (const auto& [k, v] : it->items()) {
                Category cat;
                try {
                    cat = category_from_string(k);
                } catch (const SchemaError&) {
                    throw ConfigError("unknown category '" + k + "' in category_counts");
                }
                c.category_counts[cat] = v.get<std::size_t>();
            }
        }
        if (auto it = j.find("group_size"); it != j.end()) {
            if (!it->is_array() || it->size() != 2) throw ConfigError("group_size is written as [min, max]");
            c.min_group_size = (*it)[0].get<std::size_t>();
            c.max_group_size = (*it)[1].get<std::size_t>();
        }
        read(j, "p_event", c.p_event);
        read(j, "questions_per_series", c.questions_per_series);
        read(j, "max_groups", c.max_groups);

        if (auto it = j.find("synth"); it != j.end()) {
            const auto& s = *it;
            check_keys(s, {"length_pieces", "variates", "step_seconds", "epoch", "start_offset_days",
                           "seasonal_probability", "seasonal_amplitude_range", "seasonal_period_min",
                           "seasonal_period_max_frac", "drift_probability", "drift_range", "noise_scale_range",
                           "level_range", "zero_baseline_probability", "caption_templates"},
                       "synth");
            auto& sc = c.synth;
            if (auto p = s.find("length_pieces"); p != s.end()) {
                sc.length_distribution.pieces.clear();
                for (const auto& piece : *p) {
                    if (!piece.is_array() || piece.size() != 3) throw ConfigError("length pieces are [lo, hi, weight]");
                    sc.length_distribution.pieces.push_back(
                        {piece[0].get<std::size_t>(), piece[1].get<std::size_t>(), piece[2].get<double>()});
                }
            }
            if (auto v = s.find("variates"); v != s.end()) {
                if (!v->is_array() || v->size() != 2) throw ConfigError("variates is written as [lo, hi]");
                sc.variate_distribution = {(*v)[0].get<std::size_t>(), (*v)[1].get<std::size_t>()};
            }
            read(s, "step_seconds", sc.step_seconds);
            read(s, "epoch", sc.epoch);
            read(s, "start_offset_days", sc.start_offset_days);
            read(s, "seasonal_probability", sc.seasonal_probability);
            read_range(s, "seasonal_amplitude_range", sc.seasonal_amplitude_range);
            read(s, "seasonal_period_min", sc.seasonal_period_min);
            read(s, "seasonal_period_max_frac", sc.seasonal_period_max_frac);
            read(s, "drift_probability", sc.drift_probability);
            read_range(s, "drift_range", sc.drift_slope_range);
            read_range(s, "noise_scale_range", sc.noise_scale_range);
            read_range(s, "level_range", sc.level_range);
            read(s, "zero_baseline_probability", sc.zero_baseline_probability);
            read(s, "caption_templates", sc.caption_template_bank);
        }

        if (auto it = j.find("anomaly"); it != j.end()) {
            const auto& s = *it;
            check_keys(s, {"p_none", "p_second_record", "max_channels_per_record", "factor_range", "kind_weights",
                           "p_began_before", "p_unresolved", "sustained_window_frac", "p_flatline_missing",
                           "max_event_lag", "p_zero_lag_event"},
                       "anomaly");
            auto& ac = c.anomaly;
            read(s, "p_none", ac.p_none);
            read(s, "p_second_record", ac.p_second_record);
            read(s, "max_channels_per_record", ac.max_channels_per_record);
            read_range(s, "factor_range", ac.factor_range);
            if (auto w = s.find("kind_weights"); w != s.end()) {
                if (!w->is_object()) throw ConfigError("kind_weights must map anomaly kinds to weights");
                for (const auto& [k, v] : w->items()) {
                    AnomalyKind kind;
                    try {
                        kind = anomaly_kind_from_string(k);
                    } catch (const SchemaError&) {
                        throw ConfigError("unknown anomaly kind '" + k + "'");
                    }
                    for (std::size_t i = 0; i < kAllAnomalyKinds.size(); ++i)
                        if (kAllAnomalyKinds[i] == kind) ac.kind_weights[i] = v.get<double>();
                }
            }
            read(s, "p_began_before", ac.p_began_before);
            read(s, "p_unresolved", ac.p_unresolved);
            read_range(s, "sustained_window_frac", ac.sustained_window_frac);
            read(s, "p_flatline_missing", ac.p_flatline_missing);
            read(s, "max_event_lag", ac.max_event_lag);
            read(s, "p_zero_lag_event", ac.p_zero_lag_event);
        }

        if (auto it = j.find("pairing"); it != j.end()) {
            check_keys(*it, {"max_pairs_per_group", "negative_fraction"}, "pairing");
            read(*it, "max_pairs_per_group", c.pairing.max_pairs_per_group);
            read(*it, "negative_fraction", c.pairing.negative_fraction);
        }
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed benchmark config: ") + e.what());
    }
}

inline BenchmarkConfig load_config(const io::fs::path& path) {
    const auto text = io::read_file(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON: " + path.string());
    return config_from_json(j);
}

inline std::string config_hash(const BenchmarkConfig& c) { return io::sha256_hex(to_json(c).dump()); }

}  // namespace arf
