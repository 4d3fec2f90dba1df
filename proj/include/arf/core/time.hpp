#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "arf/core/error.hpp"

namespace arf {

// Seconds since the Unix epoch, UTC.
using UnixSeconds = std::int64_t;

namespace detail {

struct CivilTime {
    int year, month, day, hour, minute, second;
};

inline CivilTime to_civil(UnixSeconds t) {
    using namespace std::chrono;
    const sys_seconds tp{seconds{t}};
    const auto day_point = floor<days>(tp);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{tp - day_point};
    return {int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day())),
            int(hms.hours().count()), int(hms.minutes().count()), int(hms.seconds().count())};
}

inline std::optional<UnixSeconds> from_civil(const CivilTime& c) {
    using namespace std::chrono;
    const year_month_day ymd{year{c.year}, month{unsigned(c.month)}, day{unsigned(c.day)}};
    if (!ymd.ok() || c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59 || c.second < 0 ||
        c.second > 60)
        return std::nullopt;
    const auto secs = sys_days{ymd}.time_since_epoch() + hours{c.hour} + minutes{c.minute} +
                      seconds{c.second};
    return duration_cast<seconds>(secs).count();
}

inline std::optional<UnixSeconds> parse_with(std::string_view text, const char* fmt, int expect) {
    CivilTime c{};
    int consumed = 0;
    const std::string s(text);
    const int n = std::sscanf(s.c_str(), fmt, &c.year, &c.month, &c.day, &c.hour, &c.minute,
                              &c.second, &consumed);
    if (n != expect || static_cast<std::size_t>(consumed) != s.size()) return std::nullopt;
    return from_civil(c);
}

}  // namespace detail

// 2025-03-01T11:11:40Z
inline std::string format_rfc3339(UnixSeconds t) {
    const auto c = detail::to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year, c.month, c.day, c.hour,
                  c.minute, c.second);
    return buf;
}

// 2025-03-01 11:11:40, the form used for answer options.
inline std::string format_option_time(UnixSeconds t) {
    const auto c = detail::to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", c.year, c.month, c.day, c.hour,
                  c.minute, c.second);
    return buf;
}

// Short axis label: 03-01 11:11
inline std::string format_axis_time(UnixSeconds t) {
    const auto c = detail::to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02d-%02d %02d:%02d", c.month, c.day, c.hour, c.minute);
    return buf;
}

inline std::optional<UnixSeconds> try_parse_rfc3339(std::string_view text) {
    return detail::parse_with(text, "%4d-%2d-%2dT%2d:%2d:%2dZ%n", 6);
}

inline std::optional<UnixSeconds> try_parse_option_time(std::string_view text) {
    return detail::parse_with(text, "%4d-%2d-%2d %2d:%2d:%2d%n", 6);
}

inline UnixSeconds parse_rfc3339(std::string_view text) {
    if (auto t = try_parse_rfc3339(text)) return *t;
    throw ParseError("invalid RFC 3339 timestamp: " + std::string(text));
}

}  // namespace arf
