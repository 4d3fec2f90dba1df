#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "arf/core/error.hpp"
#include "arf/core/io.hpp"
#include "arf/eval/prompt.hpp"

namespace arf::eval {

struct Completion {
    std::string text;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// Thrown by clients; `transient` failures are retried.
class CallFailure : public TransportError {
public:
    CallFailure(const std::string& what, bool transient) : TransportError(what), transient_(transient) {}
    bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual Completion complete(const PromptPayload& payload) = 0;
    virtual std::string name() const = 0;
    // Baselines answer instantly and deterministically; their records carry
    // zero latency so result files are reproducible.
    virtual bool deterministic() const { return false; }
};

struct ClientSettings {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string model;
    std::string api_key_env = "ARF_API_KEY";
    double temperature = 0.05;
    int max_tokens = 2000;
    int timeout_seconds = 120;
};

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must start with http:// or https://: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("unsupported endpoint scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

// Chat-completions request body; images become base64 data URLs.
inline nlohmann::json chat_request_body(const PromptPayload& p, const ClientSettings& s) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", p.user}});
    for (const auto& img : p.images)
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:image/png;base64," + io::base64_encode(img)}}}});
    return {{"model", s.model},
            {"temperature", s.temperature},
            {"max_tokens", s.max_tokens},
            {"messages", nlohmann::json::array({{{"role", "system"}, {"content", p.system}},
                                                {{"role", "user"}, {"content", content}}})}};
}

class HttpChatClient : public ModelClient {
public:
    explicit HttpChatClient(ClientSettings settings) : settings_(std::move(settings)), url_(parse_url(settings_.endpoint)) {
        if (settings_.model.empty()) throw ConfigError("model name is required for HTTP clients");
        if (const char* key = std::getenv(settings_.api_key_env.c_str())) api_key_ = key;
    }

    std::string name() const override { return settings_.model; }

    Completion complete(const PromptPayload& payload) override {
        httplib::Client cli(url_.scheme_host_port);
        cli.set_connection_timeout(settings_.timeout_seconds, 0);
        cli.set_read_timeout(settings_.timeout_seconds, 0);
        cli.set_write_timeout(settings_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        const auto body = chat_request_body(payload, settings_).dump();
        auto res = cli.Post(url_.path, headers, body, "application/json");
        if (!res) throw CallFailure("request failed: " + httplib::to_string(res.error()), true);
        if (res->status == 429 || res->status >= 500)
            throw CallFailure("HTTP " + std::to_string(res->status), true);
        if (res->status != 200) throw CallFailure("HTTP " + std::to_string(res->status) + ": " + res->body, false);
        try {
            const auto j = nlohmann::json::parse(res->body);
            Completion c;
            const auto& msg = j.at("choices").at(0).at("message").at("content");
            c.text = msg.is_string() ? msg.get<std::string>() : msg.dump();
            if (j.contains("usage")) {
                c.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                c.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
            }
            return c;
        } catch (const nlohmann::json::exception& e) {
            throw CallFailure(std::string("malformed completion response: ") + e.what(), false);
        }
    }

private:
    ClientSettings settings_;
    ParsedUrl url_;
    std::string api_key_;
};

// Concurrency and rate limiting -------------------------------------------------

class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(std::size_t cap) : available_(std::max<std::size_t>(1, cap)) {}

    void acquire() {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard lock(m_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::size_t available_;
};

using Clock = std::chrono::steady_clock;

// Token bucket; rate <= 0 disables limiting.
class RateLimiter {
public:
    RateLimiter(double rate_per_second, double burst) : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(burst_) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        for (;;) {
            std::chrono::duration<double> wait{};
            {
                std::lock_guard lock(m_);
                refill();
                if (tokens_ >= 1.0) {
                    tokens_ -= 1.0;
                    return;
                }
                wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
            }
            std::this_thread::sleep_for(wait);
        }
    }

private:
    void refill() {
        const auto now = Clock::now();
        if (last_) tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - *last_).count());
        last_ = now;
    }

    std::mutex m_;
    double rate_;
    double burst_;
    double tokens_;
    std::optional<Clock::time_point> last_;
};

struct RetryPolicy {
    int max_retries = 4;
    double base_delay_seconds = 1.0;
    double max_delay_seconds = 30.0;

    double delay(int attempt) const { return std::min(max_delay_seconds, base_delay_seconds * std::pow(2.0, attempt)); }
};

using Sleeper = std::function<void(double seconds)>;

inline void real_sleep(double seconds) { std::this_thread::sleep_for(std::chrono::duration<double>(seconds)); }

struct CallResult {
    std::optional<Completion> completion;
    int retries = 0;
    std::string error;
    double latency_ms = 0.0;
};

// Retries transient failures with exponential backoff. Exhaustion or a
// permanent failure returns an empty completion with the error recorded.
inline CallResult call_model(ModelClient& client, const PromptPayload& payload, const RetryPolicy& policy = {},
                             const Sleeper& sleep = real_sleep, ConcurrencyLimiter* cap = nullptr,
                             RateLimiter* rate = nullptr) {
    CallResult r;
    for (int attempt = 0;; ++attempt) {
        if (rate) rate->acquire();
        if (cap) cap->acquire();
        const auto t0 = Clock::now();
        try {
            auto c = client.complete(payload);
            if (cap) cap->release();
            if (!client.deterministic())
                r.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            r.completion = std::move(c);
            r.error.clear();
            return r;
        } catch (const CallFailure& e) {
            if (cap) cap->release();
            r.error = e.what();
            if (!e.transient() || attempt >= policy.max_retries) return r;
        } catch (const IntegrityError&) {
            if (cap) cap->release();
            throw;
        } catch (const std::exception& e) {
            if (cap) cap->release();
            r.error = e.what();
            return r;
        }
        ++r.retries;
        sleep(policy.delay(attempt));
    }
}

}  // namespace arf::eval
