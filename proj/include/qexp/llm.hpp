#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include <unistd.h>

#include <json.hpp>

#include "qexp/error.hpp"
#include "qexp/hash.hpp"
#include "qexp/prompts.hpp"

namespace qexp {

struct DecodeParams {
    double temperature = 0.0;
    std::size_t max_new_tokens = 256;

    bool operator==(const DecodeParams&) const = default;
};

/// Greedy decoding; 64 new tokens for keyword prompts, 256 otherwise.
inline DecodeParams default_decode_params(TemplateId id) {
    return DecodeParams{0.0, is_keyword_family(id) ? std::size_t{64} : std::size_t{256}};
}

struct LlmRequest {
    std::string model;
    std::string prompt;
    DecodeParams decode;

    /// Cache key: digest of model, prompt and decode parameters.
    std::string key() const {
        std::ostringstream canon;
        canon.precision(17);
        canon << "model=" << model << "\ntemperature=" << decode.temperature
              << "\nmax_new_tokens=" << decode.max_new_tokens << "\nprompt=" << prompt;
        return sha256_hex(canon.str());
    }
};

struct LlmResponse {
    std::string text;  // raw completion, never post-processed here
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool from_cache = false;
};

/// A text-generation backend. Implementations must be safe to call from
/// several threads.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual LlmResponse generate(const LlmRequest& request) = 0;

    /// Number of generate() calls that reached the backend.
    std::size_t calls() const { return calls_.load(); }

protected:
    void count_call() { ++calls_; }

private:
    std::atomic<std::size_t> calls_{0};
};

/// Canned completions keyed by SHA-256 of the prompt text. Fixture is jsonl
/// with one of {"prompt", "completion"}, {"prompt_sha256", "completion"} or
/// {"default": "..."} (served for prompts with no entry) per line.
class StubLlmClient : public LlmClient {
public:
    StubLlmClient() = default;

    explicit StubLlmClient(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open stub fixture " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                if (j.contains("default")) {
                    set_default(j.at("default").get<std::string>());
                } else if (j.contains("prompt")) {
                    add(j.at("prompt").get<std::string>(), j.at("completion").get<std::string>());
                } else {
                    add_hashed(j.at("prompt_sha256").get<std::string>(), j.at("completion").get<std::string>());
                }
            } catch (const nlohmann::json::exception& e) {
                throw DataError(path + ": malformed stub record at line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    void add(const std::string& prompt, std::string completion) { add_hashed(sha256_hex(prompt), std::move(completion)); }
    void add_hashed(std::string prompt_sha256, std::string completion) {
        by_hash_[std::move(prompt_sha256)] = std::move(completion);
    }
    void set_default(std::string completion) { default_ = std::move(completion); }

    LlmResponse generate(const LlmRequest& request) override {
        count_call();
        auto it = by_hash_.find(sha256_hex(request.prompt));
        if (it != by_hash_.end()) return respond(request, it->second);
        if (default_) return respond(request, *default_);
        throw EndpointError(request.key().substr(0, 16), "stub has no completion for this prompt");
    }

private:
    static LlmResponse respond(const LlmRequest& request, const std::string& text) {
        return {text, estimate_tokens(request.prompt), estimate_tokens(text), false};
    }

    std::unordered_map<std::string, std::string> by_hash_;
    std::optional<std::string> default_;
};

/// On-disk completion cache: one file per key holding the raw completion
/// bytes, plus an append-only `manifest.tsv` recording the request
/// parameters behind each key.
class CompletionCache {
public:
    explicit CompletionCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::optional<std::string> get(const std::string& key) const {
        std::ifstream in(dir_ / key, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    /// Atomic publish via rename; concurrent writers of one key are
    /// last-writer-wins.
    void put(const LlmRequest& request, const std::string& completion) {
        const auto key = request.key();
        const auto tmp = dir_ / (key + ".tmp." + std::to_string(++tmp_counter_) + "." + std::to_string(::getpid()));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out.write(completion.data(), static_cast<std::streamsize>(completion.size()));
            if (!out) throw Error("cannot write cache entry " + tmp.string());
        }
        std::filesystem::rename(tmp, dir_ / key);
        std::lock_guard lock(manifest_mutex_);
        std::ofstream m(dir_ / "manifest.tsv", std::ios::app);
        m << key << '\t' << request.model << '\t' << request.decode.temperature << '\t'
          << request.decode.max_new_tokens << '\n';
    }

private:
    std::filesystem::path dir_;
    std::atomic<std::size_t> tmp_counter_{0};
    std::mutex manifest_mutex_;
};

/// Cache first, then the client; fresh completions are written back.
inline LlmResponse complete(LlmClient& client, CompletionCache* cache, const LlmRequest& request) {
    if (cache != nullptr) {
        if (auto hit = cache->get(request.key())) {
            return {*hit, estimate_tokens(request.prompt), estimate_tokens(*hit), true};
        }
    }
    auto resp = client.generate(request);
    if (cache != nullptr) cache->put(request, resp.text);
    return resp;
}

}  // namespace qexp
