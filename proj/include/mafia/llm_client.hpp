#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mafia/errors.hpp"

namespace mafia {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    std::optional<double> temperature;  // omitted = provider default
    std::optional<int> max_tokens;
    bool operator==(const ChatRequest&) const = default;
};

inline nlohmann::json serialize_request(const ChatRequest& req) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : req.messages)
        msgs.push_back({{"role", m.role}, {"content", m.content}});
    nlohmann::json j{{"model", req.model}, {"messages", msgs}};
    if (req.temperature) j["temperature"] = *req.temperature;
    if (req.max_tokens) j["max_tokens"] = *req.max_tokens;
    return j;
}

struct RetryPolicy {
    int max_attempts = 3;
    double backoff_base_s = 0.5;  // delay before retry k is base * 2^(k-1)
};

struct ClientConfig {
    std::string base_url = "https://api.openai.com";
    std::string api_key;
    double timeout_s = 60.0;
    RetryPolicy retry;
    int max_requests_per_min = 0;  // 0 = unlimited
    std::string trace_path;        // append-only request/reply record, never holds the key

    static ClientConfig from_env() {
        ClientConfig c;
        if (const char* u = std::getenv("LLM_BASE_URL")) c.base_url = u;
        if (const char* k = std::getenv("LLM_API_KEY")) c.api_key = k;
        return c;
    }
};

inline void validate_client_config(const ClientConfig& c) {
    if (c.retry.max_attempts < 1) throw InvalidConfig("retry.max_attempts must be >= 1");
    if (c.timeout_s <= 0) throw InvalidConfig("timeout must be positive");
}

// Sliding-window limiter shared by all threads of one process. Time sources are
// injectable so tests can drive the window without sleeping.
class RateLimiter {
  public:
    explicit RateLimiter(int max_per_min, std::function<double()> now_fn = {},
                         std::function<void(double)> sleep_fn = {})
        : max_per_min_(max_per_min),
          now_(now_fn ? std::move(now_fn) : [] {
              using namespace std::chrono;
              return duration<double>(steady_clock::now().time_since_epoch()).count();
          }),
          sleep_(sleep_fn ? std::move(sleep_fn) : [](double s) {
              std::this_thread::sleep_for(std::chrono::duration<double>(s));
          }) {}

    void acquire() {
        if (max_per_min_ <= 0) return;
        for (;;) {
            double wait = 0.0;
            {
                std::lock_guard<std::mutex> lock(mu_);
                double t = now_();
                while (!stamps_.empty() && stamps_.front() <= t - 60.0) stamps_.pop_front();
                if (static_cast<int>(stamps_.size()) < max_per_min_) {
                    stamps_.push_back(t);
                    return;
                }
                wait = stamps_.front() + 60.0 - t;
            }
            sleep_(wait > 0 ? wait : 0.001);
        }
    }

    int in_window() {
        std::lock_guard<std::mutex> lock(mu_);
        double t = now_();
        while (!stamps_.empty() && stamps_.front() <= t - 60.0) stamps_.pop_front();
        return static_cast<int>(stamps_.size());
    }

  private:
    int max_per_min_;
    std::function<double()> now_;
    std::function<void(double)> sleep_;
    std::mutex mu_;
    std::deque<double> stamps_;
};

// Anything that can answer a chat request: the HTTP client or a test double.
struct ChatBackend {
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

// Deterministic stand-in for a model: canned replies or a responder function.
// Records every request so tests can inspect what would have gone on the wire.
class MockBackend : public ChatBackend {
  public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    explicit MockBackend(Responder responder) : responder_(std::move(responder)) {}
    explicit MockBackend(std::vector<std::string> canned) : canned_(std::move(canned)) {}

    std::string complete(const ChatRequest& request) override {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(request);
        if (responder_) return responder_(request);
        if (canned_.empty()) throw LlmError(LlmError::Kind::BadResponse, "mock has no replies");
        std::size_t i = std::min(requests_.size() - 1, canned_.size() - 1);
        return canned_[i];  // last canned reply repeats
    }

    std::vector<ChatRequest> requests() {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_;
    }

  private:
    std::mutex mu_;
    Responder responder_;
    std::vector<std::string> canned_;
    std::vector<ChatRequest> requests_;
};

class LlmClient : public ChatBackend {
  public:
    explicit LlmClient(ClientConfig config)
        : config_(std::move(config)), limiter_(config_.max_requests_per_min) {
        validate_client_config(config_);
        split_base_url();
    }

    std::string complete(const ChatRequest& request) override { return chat_complete(request); }

    std::string chat_complete(const ChatRequest& request) {
        if (request.messages.empty()) throw InvalidConfig("chat request has no messages");
        const std::string body = serialize_request(request).dump();
        std::optional<LlmError> last_error;
        for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
            if (attempt > 1) {
                double delay = config_.retry.backoff_base_s * std::pow(2.0, attempt - 2);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            limiter_.acquire();
            try {
                std::string reply = attempt_once(request, body);
                return reply;
            } catch (const LlmError& e) {
                if (e.kind == LlmError::Kind::Auth) throw;          // retry cannot fix credentials
                if (e.kind == LlmError::Kind::BadResponse && e.transient == false) throw;
                last_error = e;
            }
        }
        throw *last_error;
    }

  private:
    void split_base_url() {
        // "scheme://host[:port][/prefix]" -> client target + path prefix
        std::string url = config_.base_url;
        auto scheme_end = url.find("://");
        std::size_t path_start =
            scheme_end == std::string::npos ? url.find('/') : url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            host_ = url;
        } else {
            host_ = url.substr(0, path_start);
            path_prefix_ = url.substr(path_start);
            while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        }
    }

    std::string attempt_once(const ChatRequest& request, const std::string& body) {
        httplib::Client cli(host_);
        cli.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
        cli.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
        cli.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));
        httplib::Headers headers;
        if (!config_.api_key.empty())
            headers.emplace("Authorization", "Bearer " + config_.api_key);

        auto res = cli.Post(path_prefix_ + "/v1/chat/completions", headers, body,
                            "application/json");
        if (!res) {
            trace(request, 0, "transport: " + httplib::to_string(res.error()));
            throw LlmError(LlmError::Kind::Timeout,
                           "request failed: " + httplib::to_string(res.error()));
        }
        if (res->status == 401 || res->status == 403) {
            trace(request, res->status, "");
            throw LlmError(LlmError::Kind::Auth,
                           "authentication rejected (HTTP " + std::to_string(res->status) + ")");
        }
        if (res->status == 429) {
            trace(request, res->status, "");
            throw LlmError(LlmError::Kind::RateLimited, "rate limited (HTTP 429)");
        }
        if (res->status >= 500) {
            trace(request, res->status, "");
            LlmError e(LlmError::Kind::BadResponse,
                       "server error (HTTP " + std::to_string(res->status) + ")");
            e.transient = true;
            throw e;
        }
        if (res->status != 200) {
            trace(request, res->status, "");
            throw LlmError(LlmError::Kind::BadResponse,
                           "unexpected HTTP " + std::to_string(res->status));
        }
        std::string reply = extract_content(res->body);
        trace(request, 200, reply);
        return reply;
    }

    static std::string extract_content(const std::string& body) {
        try {
            auto j = nlohmann::json::parse(body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw LlmError(LlmError::Kind::BadResponse,
                           std::string("malformed completion body: ") + e.what());
        }
    }

    void trace(const ChatRequest& request, int status, const std::string& reply) {
        if (config_.trace_path.empty()) return;
        nlohmann::json rec{{"request", serialize_request(request)},
                           {"status", status},
                           {"reply", reply}};
        std::lock_guard<std::mutex> lock(trace_mu_);
        std::ofstream f(config_.trace_path, std::ios::app);
        if (f) f << rec.dump() << '\n';
    }

    ClientConfig config_;
    std::string host_;
    std::string path_prefix_;
    RateLimiter limiter_;
    std::mutex trace_mu_;
};

}  // namespace mafia
