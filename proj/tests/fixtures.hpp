#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include "arf/benchmark/config.hpp"
#include "arf/core/io.hpp"
#include "arf/eval/records.hpp"
#include "arf/question.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Short series and few channels keep generation and rendering fast; the
// default recipe is exercised separately.
inline arf::SynthConfig compact_synth() {
    arf::SynthConfig s;
    s.length_distribution.pieces = {{240, 600, 0.6}, {601, 1500, 0.4}};
    s.variate_distribution = {1, 6};
    return s;
}

inline arf::BenchmarkConfig compact_config(std::uint64_t seed, std::size_t total) {
    arf::BenchmarkConfig c;
    c.seed = seed;
    c.category_counts = arf::equal_mix(total);
    c.synth = compact_synth();
    return c;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("arf-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

// Relative path -> bytes for every regular file under root.
inline std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = arf::io::read_file(e.path());
    return out;
}

enum class Kind { Answer, Invalid, Unanswered };

// Record with the identity permutation.
inline arf::eval::EvalRecord record(const arf::Question& q, Kind kind, std::size_t canonical = 0) {
    arf::eval::EvalRecord r;
    r.question_id = q.question_id;
    r.permutation.resize(q.options.size());
    for (std::size_t i = 0; i < r.permutation.size(); ++i) r.permutation[i] = i;
    switch (kind) {
        case Kind::Answer:
            r.answer = q.options.at(canonical);
            r.presented_index = canonical;
            r.canonical_index = canonical;
            r.raw = "{\"answer\": \"" + q.options[canonical] + "\"}";
            break;
        case Kind::Invalid:
            r.raw = "{\"answer\": \"none of these\"}";
            r.answer = "none of these";
            r.invalid = true;
            break;
        case Kind::Unanswered:
            r.unanswered = true;
            r.error = "timeout";
            break;
    }
    return r;
}

inline std::vector<arf::eval::EvalRecord> oracle_records(const std::vector<arf::Question>& qs) {
    std::vector<arf::eval::EvalRecord> out;
    for (const auto& q : qs) out.push_back(record(q, Kind::Answer, q.correct_index));
    return out;
}

}  // namespace fixtures
