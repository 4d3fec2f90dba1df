#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "arf/benchmark/layout.hpp"
#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/question.hpp"

namespace arf {

inline constexpr int kManifestSchemaVersion = 1;

struct FileEntry {
    std::string id;
    std::string path;  // relative to the benchmark root
    std::string sha256;
};

struct BenchmarkManifest {
    int schema_version = kManifestSchemaVersion;
    std::uint64_t seed = 0;
    std::string config_hash;
    nlohmann::json config;
    std::string created_at;
    std::map<std::string, std::size_t> counts_by_category;
    std::map<std::string, std::size_t> counts_by_tier;
    std::size_t total = 0;
    FileEntry questions;
    std::vector<FileEntry> series;
    std::vector<FileEntry> keys;  // key sidecars, counterfactuals and the events file

    std::size_t count(Category c) const {
        auto it = counts_by_category.find(std::string(to_string(c)));
        return it == counts_by_category.end() ? 0 : it->second;
    }
};

inline nlohmann::ordered_json to_json(const FileEntry& e) {
    nlohmann::ordered_json j;
    if (!e.id.empty()) j["id"] = e.id;
    j["path"] = e.path;
    j["sha256"] = e.sha256;
    return j;
}

inline FileEntry file_entry_from_json(const nlohmann::json& j) {
    return {j.value("id", std::string{}), j.at("path").get<std::string>(), j.at("sha256").get<std::string>()};
}

inline nlohmann::ordered_json to_json(const BenchmarkManifest& m) {
    nlohmann::ordered_json j;
    j["schema_version"] = m.schema_version;
    j["seed"] = m.seed;
    j["config_hash"] = m.config_hash;
    j["config"] = m.config;
    j["created_at"] = m.created_at;
    nlohmann::ordered_json counts;
    counts["total"] = m.total;
    counts["by_category"] = m.counts_by_category;
    counts["by_tier"] = m.counts_by_tier;
    j["counts"] = counts;
    j["questions"] = to_json(m.questions);
    auto list = [](const std::vector<FileEntry>& v) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const auto& e : v) a.push_back(to_json(e));
        return a;
    };
    j["series"] = list(m.series);
    j["keys"] = list(m.keys);
    return j;
}

inline BenchmarkManifest manifest_from_json(const nlohmann::json& j) {
    try {
        BenchmarkManifest m;
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) throw SchemaError("unsupported manifest schema version");
        m.seed = j.at("seed").get<std::uint64_t>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.config = j.at("config");
        m.created_at = j.at("created_at").get<std::string>();
        const auto& c = j.at("counts");
        m.total = c.at("total").get<std::size_t>();
        m.counts_by_category = c.at("by_category").get<std::map<std::string, std::size_t>>();
        m.counts_by_tier = c.at("by_tier").get<std::map<std::string, std::size_t>>();
        m.questions = file_entry_from_json(j.at("questions"));
        for (const auto& e : j.at("series")) m.series.push_back(file_entry_from_json(e));
        for (const auto& e : j.at("keys")) m.keys.push_back(file_entry_from_json(e));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed manifest: ") + e.what());
    }
}

inline BenchmarkManifest load_manifest(const io::fs::path& root) {
    const auto path = layout::manifest_path(root);
    if (!io::fs::exists(path)) throw IntegrityError("no manifest in " + root.string() + "; generation did not finish");
    auto j = nlohmann::json::parse(io::read_file(path), nullptr, false);
    if (j.is_discarded()) throw IntegrityError("manifest is not valid JSON: " + path.string());
    try {
        return manifest_from_json(j);
    } catch (const SchemaError& e) {
        throw IntegrityError(e.what());
    }
}

inline void verify_entry(const io::fs::path& root, const FileEntry& e) {
    const auto path = root / e.path;
    if (!io::fs::exists(path)) throw IntegrityError("missing benchmark file " + e.path);
    if (io::sha256_hex(io::read_file(path)) != e.sha256) throw IntegrityError("digest mismatch for " + e.path);
}

// Checks the question file and series files against their digests and the
// recorded counts. Key files are only checked when asked, so evaluation
// never opens them.
inline std::vector<Question> verify_benchmark(const io::fs::path& root, const BenchmarkManifest& m,
                                              bool include_keys = false) {
    verify_entry(root, m.questions);
    auto questions = questions_from_jsonl(io::read_file(root / m.questions.path));
    if (questions.size() != m.total)
        throw IntegrityError("manifest lists " + std::to_string(m.total) + " questions, file has " +
                             std::to_string(questions.size()));
    std::map<std::string, std::size_t> by_cat;
    for (const auto& q : questions) ++by_cat[std::string(to_string(q.category))];
    for (auto c : kAllCategories) {
        const auto name = std::string(to_string(c));
        const std::size_t want = m.counts_by_category.count(name) ? m.counts_by_category.at(name) : 0;
        const std::size_t got = by_cat.count(name) ? by_cat.at(name) : 0;
        if (want != got) throw IntegrityError("count mismatch for category " + name);
    }
    for (const auto& e : m.series) verify_entry(root, e);
    if (include_keys)
        for (const auto& e : m.keys) verify_entry(root, e);
    return questions;
}

}  // namespace arf
