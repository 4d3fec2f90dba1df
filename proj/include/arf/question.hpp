#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/time.hpp"

namespace arf {

enum class Tier { I = 1, II = 2, III = 3 };

enum class Category { Presence, Identification, StartTime, EndTime, Magnitude, Categorization, Correlation, Indicator };

inline constexpr std::array kAllCategories{Category::Presence,   Category::Identification, Category::StartTime,
                                           Category::EndTime,    Category::Magnitude,      Category::Categorization,
                                           Category::Correlation, Category::Indicator};

inline constexpr std::array kAllTiers{Tier::I, Tier::II, Tier::III};

inline constexpr Tier tier_of(Category c) noexcept {
    switch (c) {
        case Category::Presence: return Tier::I;
        case Category::Correlation:
        case Category::Indicator: return Tier::III;
        default: return Tier::II;
    }
}

inline std::string_view to_string(Category c) {
    switch (c) {
        case Category::Presence: return "presence";
        case Category::Identification: return "identification";
        case Category::StartTime: return "start_time";
        case Category::EndTime: return "end_time";
        case Category::Magnitude: return "magnitude";
        case Category::Categorization: return "categorization";
        case Category::Correlation: return "correlation";
        case Category::Indicator: return "indicator";
    }
    return "unknown";
}

inline std::string_view to_string(Tier t) {
    switch (t) {
        case Tier::I: return "I";
        case Tier::II: return "II";
        case Tier::III: return "III";
    }
    return "?";
}

inline Category category_from_string(std::string_view s) {
    for (auto c : kAllCategories)
        if (to_string(c) == s) return c;
    throw SchemaError("unknown category: " + std::string(s));
}

inline Tier tier_from_string(std::string_view s) {
    for (auto t : kAllTiers)
        if (to_string(t) == s) return t;
    throw SchemaError("unknown tier: " + std::string(s));
}

// Option texts ---------------------------------------------------------------

namespace opt {
inline constexpr std::string_view kYes = "Yes";
inline constexpr std::string_view kNo = "No";
inline constexpr std::string_view kNoAnomaly = "No Anomaly";
inline constexpr std::string_view kBeforeEarliest = "Before the earliest timestamp";
inline constexpr std::string_view kNotResolved = "Not resolved";

inline constexpr std::string_view kLevelShift = "Level Shift";
inline constexpr std::string_view kTransientSpike = "Transient Spike";
inline constexpr std::string_view kSeasonality = "Change in Seasonality";
inline constexpr std::string_view kVariance = "Change in Variance";
inline constexpr std::string_view kTrend = "Change in Trend";

inline constexpr std::array<std::string_view, 5> kCorrelation{
    "No, there is no anomaly in either time-series",
    "No, there is an anomaly in both but they are not correlated",
    "No, there is an anomaly only in time-series 1",
    "No, there is an anomaly only in time-series 2",
    "Yes, there is an anomaly in both and they are correlated",
};
enum CorrelationOption { kCorrNeither = 0, kCorrNotCorrelated, kCorrOnly1, kCorrOnly2, kCorrYes };

inline constexpr std::array<std::string_view, 5> kIndicator{
    "The anomaly in time-series 1 is a leading indicator of the anomaly in time-series 2",
    "The anomaly in time-series 1 is a lagging indicator of the anomaly in time-series 2",
    "The anomaly in time-series 1 is not correlated to the anomaly in time-series 2",
    "The anomaly in time-series 1 is perfectly correlated to the anomaly in time-series 2",
    "No Anomaly in one or both series",
};
enum IndicatorOption { kIndLeading = 0, kIndLagging, kIndNotCorrelated, kIndPerfect, kIndNoAnomaly };

// Separator between channel names inside an Identification option; names
// themselves contain commas.
inline constexpr std::string_view kChannelSeparator = "; ";
}  // namespace opt

inline std::string_view question_template(Category c) {
    switch (c) {
        case Category::Presence: return "Does the time series exhibit an anomaly in the given time range?";
        case Category::Identification: return "Which channels are exhibiting anomalies in the given time range?";
        case Category::StartTime: return "What is the start time of the anomaly, if an anomaly exists?";
        case Category::EndTime: return "What is the end time of the anomaly, if an anomaly exists?";
        case Category::Magnitude:
            return "How much does the anomaly in this time-series deviate from the expected behavior of this "
                   "time-series, if an anomaly exists?";
        case Category::Categorization: return "What type of anomaly in the given time range is exhibited, if any?";
        case Category::Correlation:
            return "Does the anomaly in time-series 1 correlate with the anomaly in the other time-series, if "
                   "anomalies exist?";
        case Category::Indicator:
            return "Is the anomaly in time-series 1 a leading or lagging indicator of the anomaly in time-series 2, "
                   "if anomalies exist?";
    }
    return "";
}

// Semantic classes in canonical order.
inline const std::vector<std::string>& semantic_classes(Category c) {
    static const std::vector<std::string> presence{"Yes", "No"};
    static const std::vector<std::string> identification{"No Anomaly", "One Channel (small)", "One Channel (large)",
                                                         "Two Channels", "Three Channels"};
    static const std::vector<std::string> start{"No Anomaly", "Earliest", "Early", "Medium", "Late"};
    static const std::vector<std::string> end{"No Anomaly", "Early", "Medium", "Late", "Latest"};
    static const std::vector<std::string> magnitude{"No Anomaly", "Smallest", "Small", "Medium", "Large"};
    static const std::vector<std::string> categorization{"No Anomaly", "Change in Trend", "Transient Spike",
                                                         "Level Shift", "Change in Seasonality/Variance"};
    static const std::vector<std::string> correlation(opt::kCorrelation.begin(), opt::kCorrelation.end());
    static const std::vector<std::string> indicator(opt::kIndicator.begin(), opt::kIndicator.end());
    switch (c) {
        case Category::Presence: return presence;
        case Category::Identification: return identification;
        case Category::StartTime: return start;
        case Category::EndTime: return end;
        case Category::Magnitude: return magnitude;
        case Category::Categorization: return categorization;
        case Category::Correlation: return correlation;
        case Category::Indicator: return indicator;
    }
    return presence;
}

inline std::size_t option_count(Category c) noexcept { return c == Category::Presence ? 2 : 5; }

struct Question {
    std::string question_id;
    Category category = Category::Presence;
    Tier tier = Tier::I;
    std::string text;
    std::vector<std::string> captions;
    std::vector<std::string> series_refs;
    std::vector<std::string> series_paths;  // relative to the benchmark root
    std::vector<std::string> options;
    std::size_t correct_index = 0;
    std::vector<std::string> semantic_class_of_option;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;

    const std::string& correct_option() const { return options.at(correct_index); }
    const std::string& correct_class() const { return semantic_class_of_option.at(correct_index); }
    std::optional<std::size_t> option_index(std::string_view text_) const {
        for (std::size_t i = 0; i < options.size(); ++i)
            if (options[i] == text_) return i;
        return std::nullopt;
    }
};

// Binning ---------------------------------------------------------------------

namespace detail {

inline std::size_t count_channels(std::string_view option) {
    std::size_t n = 1;
    for (std::size_t pos = option.find(opt::kChannelSeparator); pos != std::string_view::npos;
         pos = option.find(opt::kChannelSeparator, pos + 1))
        ++n;
    return n;
}

// Rank of options[idx] among options accepted by `take`, ordered by `key`.
template <class Take, class Key>
std::size_t rank_among(const std::vector<std::string>& options, std::size_t idx, Take take, Key key) {
    std::size_t rank = 0;
    const auto k = key(options[idx]);
    for (std::size_t i = 0; i < options.size(); ++i)
        if (i != idx && take(options[i]) && key(options[i]) < k) ++rank;
    return rank;
}

}  // namespace detail

// Class label for an option, derived from the option texts alone.
inline std::string bin_semantic(Category category, const std::vector<std::string>& options, std::size_t idx) {
    if (idx >= options.size()) throw SchemaError("option index out of range");
    const std::string& o = options[idx];
    const auto& classes = semantic_classes(category);
    auto fail = [&]() -> std::string {
        throw SchemaError("option '" + o + "' has no semantic class in category " + std::string(to_string(category)));
    };
    switch (category) {
        case Category::Presence:
        case Category::Correlation:
        case Category::Indicator:
            if (std::find(classes.begin(), classes.end(), o) == classes.end()) return fail();
            return o;
        case Category::Identification: {
            if (o == opt::kNoAnomaly) return classes[0];
            const std::size_t n = detail::count_channels(o);
            if (n == 3) return classes[4];
            if (n == 2) return classes[3];
            if (n != 1) return fail();
            auto is_single = [](const std::string& s) {
                return s != opt::kNoAnomaly && detail::count_channels(s) == 1;
            };
            const auto r = detail::rank_among(options, idx, is_single, [](const std::string& s) { return s; });
            return r == 0 ? classes[1] : classes[2];
        }
        case Category::StartTime:
        case Category::EndTime: {
            if (o == opt::kNoAnomaly) return classes[0];
            if (category == Category::StartTime && o == opt::kBeforeEarliest) return classes[1];
            if (category == Category::EndTime && o == opt::kNotResolved) return classes[4];
            if (!try_parse_option_time(o)) return fail();
            auto is_time = [](const std::string& s) { return try_parse_option_time(s).has_value(); };
            const auto r = detail::rank_among(options, idx, is_time,
                                              [](const std::string& s) { return *try_parse_option_time(s); });
            if (r > 2) return fail();
            return category == Category::StartTime ? classes[2 + r] : classes[1 + r];
        }
        case Category::Magnitude: {
            if (o == opt::kNoAnomaly) return classes[0];
            if (!io::parse_double(o)) return fail();
            auto is_num = [](const std::string& s) { return io::parse_double(s).has_value(); };
            const auto r =
                detail::rank_among(options, idx, is_num, [](const std::string& s) { return *io::parse_double(s); });
            if (r > 3) return fail();
            return classes[1 + r];
        }
        case Category::Categorization:
            if (o == opt::kNoAnomaly) return classes[0];
            if (o == opt::kTrend) return classes[1];
            if (o == opt::kTransientSpike) return classes[2];
            if (o == opt::kLevelShift) return classes[3];
            if (o == opt::kSeasonality || o == opt::kVariance) return classes[4];
            return fail();
    }
    return fail();
}

inline std::string bin_semantic(const Question& q, std::size_t idx) { return bin_semantic(q.category, q.options, idx); }

inline std::vector<std::string> bin_all(Category category, const std::vector<std::string>& options) {
    std::vector<std::string> out;
    out.reserve(options.size());
    for (std::size_t i = 0; i < options.size(); ++i) out.push_back(bin_semantic(category, options, i));
    return out;
}

// Structural checks on a single question; throws ContractViolation.
inline void validate(const Question& q) {
    auto bad = [&](const std::string& why) { throw ContractViolation("question " + q.question_id + ": " + why); };
    if (q.tier != tier_of(q.category)) bad("tier does not match category");
    if (q.options.size() != option_count(q.category)) bad("wrong number of options");
    if (q.correct_index >= q.options.size()) bad("correct index out of range");
    std::vector<std::string> sorted = q.options;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) bad("duplicate options");
    if (q.semantic_class_of_option != bin_all(q.category, q.options)) bad("stored semantic classes disagree with binning");
    std::vector<std::string> classes = q.semantic_class_of_option;
    std::sort(classes.begin(), classes.end());
    if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) bad("two options share a semantic class");
    const std::size_t n_series = q.tier == Tier::III ? 2 : 1;
    if (q.series_refs.size() != n_series || q.captions.size() != n_series) bad("wrong number of series references");
}

// JSON ------------------------------------------------------------------------

inline std::string to_jsonl_line(const Question& q) {
    // Fixed key order for diff-friendly output.
    nlohmann::ordered_json j;
    j["question_id"] = q.question_id;
    j["category"] = to_string(q.category);
    j["tier"] = to_string(q.tier);
    j["text"] = q.text;
    j["captions"] = q.captions;
    j["series_refs"] = q.series_refs;
    j["series_paths"] = q.series_paths;
    j["options"] = q.options;
    j["correct_index"] = q.correct_index;
    j["semantic_class_of_option"] = q.semantic_class_of_option;
    j["seed"] = q.seed;
    j["notes"] = q.notes;
    return j.dump();
}

inline nlohmann::json to_json(const Question& q) { return nlohmann::json::parse(to_jsonl_line(q)); }

inline Question question_from_json(const nlohmann::json& j) {
    try {
        Question q;
        q.question_id = j.at("question_id").get<std::string>();
        q.category = category_from_string(j.at("category").get<std::string>());
        q.tier = tier_from_string(j.at("tier").get<std::string>());
        q.text = j.at("text").get<std::string>();
        q.captions = j.at("captions").get<std::vector<std::string>>();
        q.series_refs = j.at("series_refs").get<std::vector<std::string>>();
        q.series_paths = j.value("series_paths", std::vector<std::string>{});
        q.options = j.at("options").get<std::vector<std::string>>();
        q.correct_index = j.at("correct_index").get<std::size_t>();
        q.semantic_class_of_option = j.at("semantic_class_of_option").get<std::vector<std::string>>();
        q.seed = j.value("seed", std::uint64_t{0});
        q.notes = j.value("notes", std::vector<std::string>{});
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed question: ") + e.what());
    }
}

inline std::string to_jsonl(const std::vector<Question>& qs) {
    std::string out;
    for (const auto& q : qs) {
        out += to_jsonl_line(q);
        out.push_back('\n');
    }
    return out;
}

inline std::vector<Question> questions_from_jsonl(std::string_view text) {
    std::vector<Question> out;
    for (const auto& line : io::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(std::string("bad questions line: ") + e.what());
        }
        out.push_back(question_from_json(j));
    }
    return out;
}

}  // namespace arf
