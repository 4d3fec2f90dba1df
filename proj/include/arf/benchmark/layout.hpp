#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "arf/core/io.hpp"
#include "arf/time_series.hpp"

namespace arf::layout {

namespace fs = io::fs;

inline constexpr std::string_view kManifest = "manifest.json";
inline constexpr std::string_view kQuestions = "questions.jsonl";
inline constexpr std::string_view kSeriesDir = "series";
inline constexpr std::string_view kKeysDir = "keys";
inline constexpr std::string_view kImagesDir = "images";
inline constexpr std::string_view kEventsFile = "events.json";

inline fs::path manifest_path(const fs::path& root) { return root / kManifest; }
inline fs::path questions_path(const fs::path& root) { return root / kQuestions; }
inline std::string series_rel(std::string_view id) { return std::string(kSeriesDir) + "/" + std::string(id) + ".csv"; }
inline fs::path series_path(const fs::path& root, std::string_view id) { return root / series_rel(id); }
inline std::string key_rel(std::string_view id) { return std::string(kKeysDir) + "/" + std::string(id) + ".key.json"; }
inline fs::path key_path(const fs::path& root, std::string_view id) { return root / key_rel(id); }
inline std::string counterfactual_rel(std::string_view id) {
    return std::string(kKeysDir) + "/" + std::string(id) + ".counterfactual.csv";
}
inline fs::path counterfactual_path(const fs::path& root, std::string_view id) { return root / counterfactual_rel(id); }
inline fs::path events_path(const fs::path& root) { return root / kKeysDir / kEventsFile; }
inline std::string image_rel(std::string_view qid, std::size_t k) {
    return std::string(kImagesDir) + "/" + std::string(qid) + "." + std::to_string(k) + ".png";
}
inline fs::path image_path(const fs::path& root, std::string_view qid, std::size_t k) { return root / image_rel(qid, k); }

inline bool is_key_path(const fs::path& p) {
    for (const auto& part : p)
        if (part == kKeysDir) return true;
    return false;
}

// Lazily loads observed series CSVs; safe to share across worker threads.
class SeriesCache {
public:
    explicit SeriesCache(fs::path root) : root_(std::move(root)) {}

    std::shared_ptr<const TimeSeries> get(const std::string& id) {
        {
            std::lock_guard lock(m_);
            if (auto it = cache_.find(id); it != cache_.end()) return it->second;
        }
        auto s = std::make_shared<TimeSeries>(load_series_csv(series_path(root_, id), id));
        std::lock_guard lock(m_);
        return cache_.emplace(id, std::move(s)).first->second;
    }

    const fs::path& root() const noexcept { return root_; }

private:
    fs::path root_;
    std::mutex m_;
    std::map<std::string, std::shared_ptr<const TimeSeries>> cache_;
};

}  // namespace arf::layout
