#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/time.hpp"

namespace arf {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

// Per-channel generative components. Only synthetic series carry these; they
// are needed to rewrite the seasonal term for SeasonalityChange injections.
struct ChannelProfile {
    double level = 0.0;
    double noise_scale = 1.0;
    double seasonal_amplitude = 0.0;  // 0 => no seasonal term
    double seasonal_period = 0.0;     // in steps
    double seasonal_phase = 0.0;
    double drift_slope = 0.0;         // per step

    bool has_seasonality() const noexcept { return seasonal_amplitude > 0.0 && seasonal_period > 0.0; }
};

// Row-major T x V matrix of values with named channels.
struct TimeSeries {
    std::string series_id;
    std::string incident_group;
    UnixSeconds start_time = 0;
    std::int64_t step = 60;
    std::size_t length = 0;    // T
    std::size_t channels = 0;  // V
    std::vector<double> values;
    std::vector<std::string> channel_names;
    std::string caption;
    std::vector<ChannelProfile> profile;  // empty unless synthetic

    double& at(std::size_t t, std::size_t c) { return values[t * channels + c]; }
    double at(std::size_t t, std::size_t c) const { return values[t * channels + c]; }

    UnixSeconds time_at(std::size_t t) const noexcept {
        return start_time + static_cast<UnixSeconds>(t) * step;
    }
    UnixSeconds end_time() const noexcept { return length == 0 ? start_time : time_at(length - 1); }

    std::vector<double> channel(std::size_t c) const {
        std::vector<double> out(length);
        for (std::size_t t = 0; t < length; ++t) out[t] = at(t, c);
        return out;
    }

    std::optional<std::size_t> channel_index(std::string_view name) const {
        for (std::size_t c = 0; c < channel_names.size(); ++c)
            if (channel_names[c] == name) return c;
        return std::nullopt;
    }

    bool same_shape(const TimeSeries& other) const noexcept {
        return length == other.length && channels == other.channels;
    }
};

// Bounds applied by validate(); defaults follow the benchmark recipe.
struct SeriesLimits {
    std::size_t min_length = 240;
    std::size_t max_length = 50'000;
    std::size_t min_channels = 1;
    std::size_t max_channels = 100;
};

inline void validate(const TimeSeries& s, const SeriesLimits& limits = {}) {
    if (s.length < limits.min_length || s.length > limits.max_length)
        throw ContractViolation("series " + s.series_id + ": length " + std::to_string(s.length) +
                                " outside [" + std::to_string(limits.min_length) + ", " +
                                std::to_string(limits.max_length) + "]");
    if (s.channels < limits.min_channels || s.channels > limits.max_channels)
        throw ContractViolation("series " + s.series_id + ": channel count out of range");
    if (s.values.size() != s.length * s.channels)
        throw ContractViolation("series " + s.series_id + ": value matrix shape mismatch");
    if (s.channel_names.size() != s.channels)
        throw ContractViolation("series " + s.series_id + ": channel name count mismatch");
    if (std::set<std::string>(s.channel_names.begin(), s.channel_names.end()).size() != s.channels)
        throw ContractViolation("series " + s.series_id + ": duplicate channel names");
    if (s.step <= 0) throw ContractViolation("series " + s.series_id + ": non-positive step");
}

namespace csv {

inline void append_field(std::string& out, std::string_view field) {
    const bool quote = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!quote) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
}

inline std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted CSV field");
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace csv

// Header `timestamp,<name1>,...,<nameV>`, RFC 3339 timestamps, empty cell for
// a missing value. Values are written in shortest round-trip form.
inline std::string to_csv(const TimeSeries& s) {
    std::string out;
    out.reserve(s.length * (22 + 12 * s.channels));
    out += "timestamp";
    for (const auto& name : s.channel_names) {
        out.push_back(',');
        csv::append_field(out, name);
    }
    out.push_back('\n');
    for (std::size_t t = 0; t < s.length; ++t) {
        out += format_rfc3339(s.time_at(t));
        for (std::size_t c = 0; c < s.channels; ++c) {
            out.push_back(',');
            out += io::format_double(s.at(t, c));
        }
        out.push_back('\n');
    }
    return out;
}

// Parses a series CSV. Identity fields other than the values are left for
// the caller to fill from the manifest.
inline TimeSeries from_csv(std::string_view text, std::string series_id = {}) {
    const auto lines = io::split_lines(text);
    if (lines.empty()) throw ParseError("empty series CSV");
    auto header = csv::split_record(lines[0]);
    if (header.empty() || header[0] != "timestamp") throw ParseError("series CSV must start with a timestamp column");
    TimeSeries s;
    s.series_id = std::move(series_id);
    s.channel_names.assign(header.begin() + 1, header.end());
    s.channels = s.channel_names.size();
    std::vector<UnixSeconds> times;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = csv::split_record(lines[i]);
        if (fields.size() != s.channels + 1)
            throw ParseError("row " + std::to_string(i) + " has " + std::to_string(fields.size()) + " fields");
        times.push_back(parse_rfc3339(fields[0]));
        for (std::size_t c = 0; c < s.channels; ++c) {
            if (fields[c + 1].empty()) {
                s.values.push_back(kMissing);
            } else if (auto v = io::parse_double(fields[c + 1])) {
                s.values.push_back(*v);
            } else {
                throw ParseError("bad value '" + fields[c + 1] + "' in row " + std::to_string(i));
            }
        }
    }
    s.length = times.size();
    if (s.length == 0) throw ParseError("series CSV has no rows");
    s.start_time = times.front();
    s.step = s.length > 1 ? times[1] - times[0] : 60;
    for (std::size_t t = 1; t < s.length; ++t)
        if (times[t] - times[t - 1] != s.step || s.step <= 0)
            throw ParseError("timestamps are not evenly spaced and strictly increasing");
    return s;
}

inline TimeSeries load_series_csv(const io::fs::path& path, std::string series_id = {}) {
    return from_csv(io::read_file(path), std::move(series_id));
}

}  // namespace arf
