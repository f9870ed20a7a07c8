#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qexp/error.hpp"
#include "qexp/llm.hpp"

namespace qexp {

/// Environment variable holding the endpoint credential, sent as a bearer token.
inline constexpr const char* kApiKeyEnv = "QEXP_LLM_API_KEY";

struct HttpClientOptions {
    std::string url;  // e.g. http://localhost:8080/generate
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};
};

/// POSTs {model, prompt, max_new_tokens, temperature} and expects {text}.
/// Connection failures, 429 and 5xx are retried with exponential backoff;
/// other statuses fail immediately.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpClientOptions options) : options_(std::move(options)) {
        const auto scheme = options_.url.find("://");
        if (scheme == std::string::npos) throw ConfigError("llm.endpoint must be an absolute http URL");
        const auto slash = options_.url.find('/', scheme + 3);
        base_ = options_.url.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : options_.url.substr(slash);
        if (options_.max_attempts < 1) throw ConfigError("llm.max_attempts must be >= 1");
    }

    LlmResponse generate(const LlmRequest& request) override {
        count_call();
        const auto id = request.key().substr(0, 16);
        nlohmann::json body{{"model", request.model},
                            {"prompt", request.prompt},
                            {"max_new_tokens", request.decode.max_new_tokens},
                            {"temperature", request.decode.temperature}};
        httplib::Headers headers;
        if (const char* key = std::getenv(kApiKeyEnv); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        auto backoff = options_.initial_backoff;
        std::string last_error;
        for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
            httplib::Client cli(base_);
            cli.set_connection_timeout(options_.timeout);
            cli.set_read_timeout(options_.timeout);
            auto res = cli.Post(path_, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "connection failed: " + httplib::to_string(res.error());
            } else if (res->status == 200) {
                return parse(id, request, res->body);
            } else if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
            } else {
                throw EndpointError(id, "HTTP " + std::to_string(res->status) + ": " + res->body);
            }
            if (attempt < options_.max_attempts) {
                std::this_thread::sleep_for(backoff);
                backoff *= 2;
            }
        }
        throw EndpointError(id, last_error + " after " + std::to_string(options_.max_attempts) + " attempts");
    }

private:
    static LlmResponse parse(const std::string& id, const LlmRequest& request, const std::string& body) {
        try {
            const auto j = nlohmann::json::parse(body);
            LlmResponse r;
            r.text = j.at("text").get<std::string>();
            r.prompt_tokens = j.value("prompt_tokens", estimate_tokens(request.prompt));
            r.completion_tokens = j.value("completion_tokens", estimate_tokens(r.text));
            return r;
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(id, std::string("malformed response: ") + e.what());
        }
    }

    HttpClientOptions options_;
    std::string base_;
    std::string path_;
};

}  // namespace qexp
