#pragma once

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "arf/core/error.hpp"

namespace arf::io {

namespace fs = std::filesystem;

// Every file read in the library goes through read_file(), so tests can
// observe which paths a code path touches (answer-key isolation).
using ReadObserver = std::function<void(const fs::path&)>;

namespace detail {
inline std::mutex& observer_mutex() {
    static std::mutex m;
    return m;
}
inline ReadObserver& observer() {
    static ReadObserver obs;
    return obs;
}
}  // namespace detail

inline void set_read_observer(ReadObserver obs) {
    std::lock_guard lock(detail::observer_mutex());
    detail::observer() = std::move(obs);
}

class ScopedReadObserver {
public:
    explicit ScopedReadObserver(ReadObserver obs) { set_read_observer(std::move(obs)); }
    ~ScopedReadObserver() { set_read_observer(nullptr); }
    ScopedReadObserver(const ScopedReadObserver&) = delete;
    ScopedReadObserver& operator=(const ScopedReadObserver&) = delete;
};

inline std::string read_file(const fs::path& path) {
    {
        std::lock_guard lock(detail::observer_mutex());
        if (detail::observer()) detail::observer()(path);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FilesystemError("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

// Writes through a temporary sibling and renames, so readers never see a
// half-written file.
inline void write_file(const fs::path& path, std::string_view data) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw FilesystemError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FilesystemError("cannot open for writing: " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw FilesystemError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw FilesystemError("rename failed for " + path.string() + ": " + ec.message());
}

inline void write_file(const fs::path& path, std::span<const std::uint8_t> data) {
    write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    return lines;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_hex(std::span<const std::uint8_t> data) {
    return sha256_hex(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

inline std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

// Compact representation for prompts and labels.
inline std::string format_compact(double v, int precision = 6) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, precision);
    return std::string(buf, end);
}

inline std::optional<double> parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace arf::io
