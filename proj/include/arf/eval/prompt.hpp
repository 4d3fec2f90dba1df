#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/core/rng.hpp"
#include "arf/core/time.hpp"
#include "arf/eval/prompt_text.hpp"
#include "arf/question.hpp"
#include "arf/time_series.hpp"

namespace arf::eval {

enum class Mode { Vision, Text };

inline std::string_view to_string(Mode m) { return m == Mode::Vision ? "vision" : "text"; }

inline Mode mode_from_string(std::string_view s) {
    if (s == "vision") return Mode::Vision;
    if (s == "text") return Mode::Text;
    throw ConfigError("mode must be 'vision' or 'text', got '" + std::string(s) + "'");
}

// presented[i] = canonical options[perm[i]].
using Permutation = std::vector<std::size_t>;

inline Permutation shuffle_options(std::size_t n_options, std::uint64_t seed) {
    Permutation p(n_options);
    std::iota(p.begin(), p.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(p);
    return p;
}

inline std::uint64_t shuffle_seed(std::uint64_t run_seed, std::string_view question_id) {
    return derive_seed(run_seed, "shuffle", hash_tag(question_id));
}

inline Permutation shuffle_options(const Question& q, std::uint64_t run_seed) {
    if (q.options.size() < 2) throw HarnessError("question " + q.question_id + " has fewer than 2 options");
    return shuffle_options(q.options.size(), shuffle_seed(run_seed, q.question_id));
}

inline std::size_t to_canonical(const Permutation& p, std::size_t presented) { return p.at(presented); }

inline std::size_t to_presented(const Permutation& p, std::size_t canonical) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] == canonical) return i;
    throw HarnessError("index not in permutation");
}

// Text-mode serialization -------------------------------------------------------

// Characters per token 4, plus a 10% safety margin.
inline std::size_t estimate_tokens(std::string_view text) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / 4.0 * 1.1));
}

inline constexpr std::array<double, 4> kTruncationFractions{0.25, 0.40, 0.55, 0.70};
inline constexpr std::size_t kMaxStride = 10;
// Striding may not leave fewer rows than this; shorter series go straight to
// middle truncation.
inline constexpr std::size_t kMinStridedRows = 1000;
inline constexpr std::string_view kElisionPrefix = "... [";

struct SerializedSeries {
    std::string text;
    std::size_t rows = 0;      // data rows emitted
    std::size_t stride = 1;
    double truncated_fraction = 0.0;
};

namespace detail {

inline std::string header(const TimeSeries& s, std::string_view label) {
    std::string h = "# series";
    if (!label.empty()) h += " " + std::string(label);
    h += ": start " + format_rfc3339(s.start_time) + ", end " + format_rfc3339(s.end_time()) + ", step " +
         std::to_string(s.step) + "s, " + std::to_string(s.length) + " rows\n";
    h += "timestamp";
    for (const auto& n : s.channel_names) {
        h.push_back(',');
        csv::append_field(h, n);
    }
    h.push_back('\n');
    return h;
}

inline void append_row(std::string& out, const TimeSeries& s, std::size_t t) {
    out += format_rfc3339(s.time_at(t));
    for (std::size_t c = 0; c < s.channels; ++c) {
        out.push_back(',');
        out += io::format_compact(s.at(t, c), 6);
    }
    out.push_back('\n');
}

}  // namespace detail

// Whole series if it fits; else the smallest stride in 2..10 that fits while
// keeping >= 1000 rows; else the series with 25/40/55/70% removed from the
// middle, first fraction that fits.
inline SerializedSeries serialize_series_text(const TimeSeries& s, std::size_t budget_tokens, std::string_view label = {}) {
    if (budget_tokens == 0) throw SerializationError("context budget must be positive");
    if (s.length == 0) throw SerializationError("cannot serialize an empty series");
    const std::string head = detail::header(s, label);

    auto strided = [&](std::size_t stride) {
        SerializedSeries r;
        r.stride = stride;
        r.text = head;
        if (stride > 1) r.text += "# every " + std::to_string(stride) + "th row shown\n";
        for (std::size_t t = 0; t < s.length; t += stride) {
            detail::append_row(r.text, s, t);
            ++r.rows;
        }
        return r;
    };
    auto full = strided(1);
    if (estimate_tokens(full.text) <= budget_tokens) return full;
    for (std::size_t stride = 2; stride <= kMaxStride; ++stride) {
        if ((s.length + stride - 1) / stride < kMinStridedRows) break;
        auto r = strided(stride);
        if (estimate_tokens(r.text) <= budget_tokens) return r;
    }
    std::size_t smallest = 0;
    for (double f : kTruncationFractions) {
        const auto keep = static_cast<std::size_t>(std::ceil((1.0 - f) * static_cast<double>(s.length) - 1e-9));
        const std::size_t n_head = (keep + 1) / 2;
        const std::size_t n_tail = keep - n_head;
        SerializedSeries r;
        r.truncated_fraction = f;
        r.text = head;
        for (std::size_t t = 0; t < n_head; ++t) detail::append_row(r.text, s, t);
        r.text += std::string(kElisionPrefix) + std::to_string(s.length - keep) + " rows elided] ...\n";
        for (std::size_t t = s.length - n_tail; t < s.length; ++t) detail::append_row(r.text, s, t);
        r.rows = keep;
        smallest = estimate_tokens(r.text);
        if (smallest <= budget_tokens) return r;
    }
    throw SerializationError("series " + s.series_id + " (" + std::to_string(s.length) + " rows x " +
                             std::to_string(s.channels) + " channels) needs " + std::to_string(smallest) +
                             " tokens even with 70% removed; budget is " + std::to_string(budget_tokens));
}

// Prompt payload ----------------------------------------------------------------

struct PromptPayload {
    std::string system;
    std::string user;
    std::vector<std::vector<std::uint8_t>> images;  // PNG bytes, vision mode
    Permutation permutation;
    std::vector<std::string> presented_options;
    const Question* question = nullptr;  // for in-process baselines
};

inline char option_letter(std::size_t i) { return static_cast<char>('A' + i); }

// Vision mode needs 1 image (Tiers I-II) or 3 (Tier III); text mode needs
// one serialized block per referenced series.
inline PromptPayload build_prompt(const Question& q, Mode mode, const Permutation& perm,
                                  std::vector<std::vector<std::uint8_t>> images = {},
                                  const std::vector<std::string>& series_text = {},
                                  std::string_view few_shot_block = {}) {
    if (perm.size() != q.options.size()) throw HarnessError("permutation size does not match options");
    const std::size_t want_images = q.tier == Tier::III ? 3 : 1;
    if (mode == Mode::Vision && images.size() != want_images)
        throw HarnessError("question " + q.question_id + " needs " + std::to_string(want_images) +
                           " images, got " + std::to_string(images.size()));
    if (mode == Mode::Text && series_text.size() != q.series_refs.size())
        throw HarnessError("question " + q.question_id + " needs serialized text for every referenced series");

    PromptPayload p;
    p.system = std::string(kSystemPrompt);
    if (!few_shot_block.empty()) {
        p.system += "\n\n";
        p.system += few_shot_block;
    }
    p.permutation = perm;
    p.question = &q;
    std::string& u = p.user;
    u += "Question: " + q.text + "\n";
    if (q.captions.size() == 1) {
        u += "Time-series description: " + q.captions[0] + "\n";
    } else {
        for (std::size_t i = 0; i < q.captions.size(); ++i)
            u += "Time-series " + std::to_string(i + 1) + " description: " + q.captions[i] + "\n";
    }
    u += "Options:\n";
    for (std::size_t i = 0; i < perm.size(); ++i) {
        p.presented_options.push_back(q.options.at(perm[i]));
        u += std::string(1, option_letter(i)) + ". " + p.presented_options.back() + "\n";
    }
    if (mode == Mode::Vision) {
        if (want_images == 3)
            u += "Images: (1) both time-series stacked with a shared time axis, time-series 1 in blue and "
                 "time-series 2 in orange; (2) time-series 1; (3) time-series 2.\n";
        p.images = std::move(images);
    } else {
        u += "Time-series data:\n";
        for (const auto& t : series_text) u += t;
    }
    return p;
}

}  // namespace arf::eval
