#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/eval/prompt.hpp"
#include "arf/question.hpp"

namespace arf::eval {

struct EvalRecord {
    std::string question_id;
    Permutation permutation;
    std::string raw;
    std::optional<std::string> answer;            // parsed "answer" field
    std::optional<std::size_t> presented_index;   // index in shuffled order
    std::optional<std::size_t> canonical_index;   // index in stored order
    bool invalid = false;                         // parsed but no option matched, or unparsable
    bool unanswered = false;                      // transport failure / empty completion
    double latency_ms = 0.0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    int retries = 0;
    std::string error;

    bool answered_validly() const noexcept { return canonical_index.has_value(); }
};

// Trim, case-fold, collapse internal whitespace.
inline std::string normalize_answer(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

// First balanced {...} object in `raw` that parses and carries "answer".
// String literals are respected while matching braces, so prose and code
// fences around the object are ignored.
inline std::optional<nlohmann::json> extract_answer_object(std::string_view raw) {
    for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
        int depth = 0;
        bool in_str = false;
        bool esc = false;
        for (std::size_t i = open; i < raw.size(); ++i) {
            const char ch = raw[i];
            if (in_str) {
                if (esc) esc = false;
                else if (ch == '\\') esc = true;
                else if (ch == '"') in_str = false;
                continue;
            }
            if (ch == '"') in_str = true;
            else if (ch == '{') ++depth;
            else if (ch == '}' && --depth == 0) {
                auto j = nlohmann::json::parse(raw.substr(open, i - open + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object() && j.contains("answer")) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

inline std::string answer_to_string(const nlohmann::json& a) {
    if (a.is_string()) return a.get<std::string>();
    if (a.is_number_integer()) return std::to_string(a.get<std::int64_t>());
    if (a.is_number()) return io::format_double(a.get<double>());
    if (a.is_null()) return "";
    return a.dump();
}

// Matches against the presented (shuffled) options, then translates back.
inline EvalRecord parse_answer(std::string_view raw, const Question& q, const Permutation& perm) {
    EvalRecord r;
    r.question_id = q.question_id;
    r.permutation = perm;
    r.raw = std::string(raw);
    const auto obj = extract_answer_object(raw);
    if (!obj) {
        r.invalid = true;
        return r;
    }
    r.answer = answer_to_string((*obj)["answer"]);
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < perm.size() && !hit; ++i)
        if (q.options.at(perm[i]) == *r.answer) hit = i;
    if (!hit) {
        const auto want = normalize_answer(*r.answer);
        for (std::size_t i = 0; i < perm.size() && !hit; ++i)
            if (normalize_answer(q.options.at(perm[i])) == want) hit = i;
    }
    if (!hit) {
        r.invalid = true;
        return r;
    }
    r.presented_index = hit;
    r.canonical_index = to_canonical(perm, *hit);
    return r;
}

inline EvalRecord unanswered_record(const Question& q, const Permutation& perm, std::string error) {
    EvalRecord r;
    r.question_id = q.question_id;
    r.permutation = perm;
    r.unanswered = true;
    r.error = std::move(error);
    return r;
}

// JSON ------------------------------------------------------------------------

inline std::string to_jsonl_line(const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["permutation"] = r.permutation;
    j["raw"] = r.raw;
    j["answer"] = r.answer ? nlohmann::ordered_json(*r.answer) : nlohmann::ordered_json(nullptr);
    j["presented_index"] = r.presented_index ? nlohmann::ordered_json(*r.presented_index) : nlohmann::ordered_json(nullptr);
    j["canonical_index"] = r.canonical_index ? nlohmann::ordered_json(*r.canonical_index) : nlohmann::ordered_json(nullptr);
    j["invalid"] = r.invalid;
    j["unanswered"] = r.unanswered;
    j["latency_ms"] = r.latency_ms;
    j["prompt_tokens"] = r.prompt_tokens;
    j["completion_tokens"] = r.completion_tokens;
    j["retries"] = r.retries;
    j["error"] = r.error;
    return j.dump();
}

inline EvalRecord record_from_json(const nlohmann::json& j) {
    try {
        EvalRecord r;
        r.question_id = j.at("question_id").get<std::string>();
        r.permutation = j.at("permutation").get<Permutation>();
        r.raw = j.value("raw", std::string{});
        if (j.contains("answer") && !j["answer"].is_null()) r.answer = j["answer"].get<std::string>();
        if (j.contains("presented_index") && !j["presented_index"].is_null())
            r.presented_index = j["presented_index"].get<std::size_t>();
        if (j.contains("canonical_index") && !j["canonical_index"].is_null())
            r.canonical_index = j["canonical_index"].get<std::size_t>();
        r.invalid = j.value("invalid", false);
        r.unanswered = j.value("unanswered", false);
        r.latency_ms = j.value("latency_ms", 0.0);
        r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
        r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
        r.retries = j.value("retries", 0);
        r.error = j.value("error", std::string{});
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed eval record: ") + e.what());
    }
}

// Tolerates a torn final line (interrupted writer) by dropping it.
inline std::vector<EvalRecord> records_from_jsonl(std::string_view text) {
    std::vector<EvalRecord> out;
    const auto lines = io::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto j = nlohmann::json::parse(lines[i], nullptr, false);
        if (j.is_discarded()) {
            if (i + 1 == lines.size()) break;
            throw SchemaError("bad results line " + std::to_string(i + 1));
        }
        out.push_back(record_from_json(j));
    }
    return out;
}

inline std::vector<EvalRecord> load_records(const io::fs::path& path) { return records_from_jsonl(io::read_file(path)); }

}  // namespace arf::eval
