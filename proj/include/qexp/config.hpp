#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qexp/bm25.hpp"
#include "qexp/error.hpp"
#include "qexp/llm.hpp"
#include "qexp/prf.hpp"
#include "qexp/prompts.hpp"
#include "qexp/text.hpp"

namespace qexp {

/// none | bo1 | bo2 | kl | llm:<template>
struct ExpanderSpec {
    enum class Kind { None, Prf, Llm };
    Kind kind = Kind::None;
    PrfModel prf_model = PrfModel::Bo1;
    TemplateId template_id = TemplateId::CoT;

    static ExpanderSpec parse(std::string_view s) {
        ExpanderSpec e;
        if (s == "none") return e;
        if (s.starts_with("llm:")) {
            e.kind = Kind::Llm;
            e.template_id = parse_template_id(s.substr(4));
            return e;
        }
        e.kind = Kind::Prf;
        e.prf_model = parse_prf_model(s);
        return e;
    }

    std::string str() const {
        switch (kind) {
            case Kind::None: return "none";
            case Kind::Prf: return std::string(to_string(prf_model));
            case Kind::Llm: return "llm:" + to_string(template_id);
        }
        return "none";
    }
};

struct LlmSettings {
    std::optional<std::string> endpoint;
    std::optional<std::string> stub;
    std::string model = "flan-ul2";
    std::optional<std::string> cache_dir;
    double temperature = 0.0;
    std::optional<std::size_t> max_new_tokens;  // per-family default when unset
    PromptOptions prompt;
    std::optional<std::string> fewshot;
    std::size_t max_in_flight = 4;
    int max_attempts = 3;
    int initial_backoff_ms = 500;
};

struct ExperimentConfig {
    std::optional<std::string> corpus;
    CorpusFormat corpus_format = CorpusFormat::Tsv;
    AnalyzerConfig analyzer = AnalyzerConfig::english();
    std::string stopwords_spec = "en-v1";
    std::optional<std::string> index_dir;
    Bm25Params bm25;
    ExpanderSpec expander;
    PrfConfig prf;
    LlmSettings llm;
    std::optional<std::string> topics;
    std::optional<std::string> qrels;
    std::optional<std::string> output_dir;
    std::string run_tag = "run";
    std::size_t k = 1000;
    std::size_t workers = 1;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        const auto opt = [](const std::optional<std::string>& s) {
            return s ? nlohmann::ordered_json(*s) : nlohmann::ordered_json(nullptr);
        };
        j["corpus"] = {{"path", opt(corpus)}, {"format", to_string(corpus_format)}};
        j["analyzer"] = {{"lowercase", analyzer.lowercase},
                         {"stopwords", stopwords_spec},
                         {"stemmer", to_string(analyzer.stemmer)},
                         {"fingerprint", analyzer.fingerprint()}};
        j["index_dir"] = opt(index_dir);
        j["bm25"] = {{"k1", bm25.k1}, {"b", bm25.b}, {"k3", bm25.k3}};
        j["expander"] = expander.str();
        j["prf"] = {{"fb_docs", prf.fb_docs}, {"fb_terms", prf.fb_terms}, {"beta", prf.beta}};
        j["llm"] = {{"endpoint", opt(llm.endpoint)},
                    {"stub", opt(llm.stub)},
                    {"model", llm.model},
                    {"cache_dir", opt(llm.cache_dir)},
                    {"temperature", llm.temperature},
                    {"max_new_tokens", llm.max_new_tokens ? nlohmann::ordered_json(*llm.max_new_tokens)
                                                          : nlohmann::ordered_json(nullptr)},
                    {"context_budget_tokens", llm.prompt.context_budget_tokens},
                    {"prf_doc_chars", llm.prompt.prf_doc_chars},
                    {"fewshot", opt(llm.fewshot)},
                    {"max_in_flight", llm.max_in_flight},
                    {"max_attempts", llm.max_attempts},
                    {"initial_backoff_ms", llm.initial_backoff_ms}};
        j["topics"] = opt(topics);
        j["qrels"] = opt(qrels);
        j["output_dir"] = opt(output_dir);
        j["run_tag"] = run_tag;
        j["k"] = k;
        j["workers"] = workers;
        return j;
    }
};

namespace detail {

class FieldReader {
public:
    FieldReader(const nlohmann::json& j, std::string prefix, const std::filesystem::path& base)
        : j_(j), prefix_(std::move(prefix)), base_(base) {
        if (!j_.is_object()) throw ConfigError("config field '" + display("") + "' must be an object");
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) throw ConfigError("unknown config field '" + display(key) + "'");
        }
    }

    const nlohmann::json* raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        const auto* v = raw(key);
        if (v == nullptr) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v->is_string()) throw ConfigError("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v->is_number()) throw ConfigError("");
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!v->is_number_unsigned()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v->is_number_integer()) throw ConfigError("");
            }
            out = v->get<T>();
        } catch (const std::exception&) {
            throw ConfigError("config field '" + display(key) + "' has the wrong type");
        }
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        if (raw(key) == nullptr) return;
        T value{};
        get(key, value);
        out = std::move(value);
    }

    /// Relative paths resolve against the config file's directory.
    void path(const std::string& key, std::optional<std::string>& out) {
        std::optional<std::string> s;
        get(key, s);
        if (!s) return;
        if (s->empty()) throw ConfigError("config field '" + display(key) + "' is empty");
        std::filesystem::path p(*s);
        out = (p.is_absolute() ? p : base_ / p).lexically_normal().string();
    }

    FieldReader child(const std::string& key) {
        static const nlohmann::json kEmpty = nlohmann::json::object();
        const auto* v = raw(key);
        return FieldReader(v == nullptr ? kEmpty : *v, display(key), base_);
    }

    std::string display(const std::string& key) const {
        if (prefix_.empty()) return key;
        return key.empty() ? prefix_ : prefix_ + "." + key;
    }

    template <typename F>
    void wrap(const std::string& key, F&& f) {
        try {
            f();
        } catch (const ConfigError& e) {
            throw ConfigError("config field '" + display(key) + "': " + e.what());
        }
    }

private:
    const nlohmann::json& j_;
    std::string prefix_;
    std::filesystem::path base_;
    std::set<std::string> seen_;
};

}  // namespace detail

/// Parses and validates a config object. Relative paths resolve against `base`.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base) {
    ExperimentConfig c;
    detail::FieldReader root(j, "", base);

    auto corpus = root.child("corpus");
    corpus.path("path", c.corpus);
    std::string fmt = "tsv";
    corpus.get("format", fmt);
    corpus.wrap("format", [&] { c.corpus_format = parse_corpus_format(fmt); });
    corpus.finish();

    auto an = root.child("analyzer");
    an.get("lowercase", c.analyzer.lowercase);
    an.get("stopwords", c.stopwords_spec);
    std::string stemmer(to_string(c.analyzer.stemmer));
    an.get("stemmer", stemmer);
    an.wrap("stemmer", [&] { c.analyzer.stemmer = parse_stemmer(stemmer); });
    if (c.stopwords_spec == kEnglishStopwordsVersion) {
        c.analyzer.stopwords = {kEnglishStopwords.begin(), kEnglishStopwords.end()};
        c.analyzer.stopwords_name = c.stopwords_spec;
    } else if (c.stopwords_spec == "none") {
        c.analyzer.stopwords.clear();
        c.analyzer.stopwords_name = "none";
    } else {
        std::filesystem::path p(c.stopwords_spec);
        if (!p.is_absolute()) p = base / p;
        if (!std::filesystem::exists(p)) {
            throw ConfigError("config field 'analyzer.stopwords': no such list or file '" + c.stopwords_spec + "'");
        }
        c.stopwords_spec = p.lexically_normal().string();
        c.analyzer.stopwords = read_stopword_file(c.stopwords_spec);
        c.analyzer.stopwords_name = p.filename().string();
    }
    an.finish();

    root.path("index_dir", c.index_dir);

    auto bm = root.child("bm25");
    bm.get("k1", c.bm25.k1);
    bm.get("b", c.bm25.b);
    bm.get("k3", c.bm25.k3);
    bm.finish();
    root.wrap("bm25", [&] { c.bm25.validate(); });

    std::string expander = "none";
    root.get("expander", expander);
    root.wrap("expander", [&] { c.expander = ExpanderSpec::parse(expander); });

    auto prf = root.child("prf");
    prf.get("fb_docs", c.prf.fb_docs);
    prf.get("fb_terms", c.prf.fb_terms);
    prf.get("beta", c.prf.beta);
    prf.finish();
    if (c.expander.kind == ExpanderSpec::Kind::Prf) c.prf.model = c.expander.prf_model;
    root.wrap("prf", [&] { c.prf.validate(); });

    auto llm = root.child("llm");
    llm.get("endpoint", c.llm.endpoint);
    llm.path("stub", c.llm.stub);
    llm.get("model", c.llm.model);
    llm.path("cache_dir", c.llm.cache_dir);
    llm.get("temperature", c.llm.temperature);
    llm.get("max_new_tokens", c.llm.max_new_tokens);
    llm.get("context_budget_tokens", c.llm.prompt.context_budget_tokens);
    llm.get("prf_doc_chars", c.llm.prompt.prf_doc_chars);
    llm.path("fewshot", c.llm.fewshot);
    llm.get("max_in_flight", c.llm.max_in_flight);
    llm.get("max_attempts", c.llm.max_attempts);
    llm.get("initial_backoff_ms", c.llm.initial_backoff_ms);
    llm.finish();
    if (c.llm.temperature < 0.0) throw ConfigError("config field 'llm.temperature' must be >= 0");
    if (c.llm.max_new_tokens && *c.llm.max_new_tokens == 0) {
        throw ConfigError("config field 'llm.max_new_tokens' must be >= 1");
    }
    if (c.llm.max_in_flight == 0) throw ConfigError("config field 'llm.max_in_flight' must be >= 1");
    if (c.llm.max_attempts < 1) throw ConfigError("config field 'llm.max_attempts' must be >= 1");
    if (c.llm.initial_backoff_ms < 0) throw ConfigError("config field 'llm.initial_backoff_ms' must be >= 0");
    if (c.llm.endpoint && c.llm.stub) {
        throw ConfigError("config fields 'llm.endpoint' and 'llm.stub' are mutually exclusive");
    }

    root.path("topics", c.topics);
    root.path("qrels", c.qrels);
    root.path("output_dir", c.output_dir);
    root.get("run_tag", c.run_tag);
    if (c.run_tag.empty() || c.run_tag.find_first_of(" \t\n/") != std::string::npos) {
        throw ConfigError("config field 'run_tag' must be non-empty without whitespace or '/'");
    }
    root.get("k", c.k);
    if (c.k == 0) throw ConfigError("config field 'k' must be >= 1");
    root.get("workers", c.workers);
    if (c.workers == 0) throw ConfigError("config field 'workers' must be >= 1");
    root.finish();
    return c;
}

inline nlohmann::json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
}

/// Fails with a message naming `field` when a required path is missing.
inline const std::string& require_path(const std::optional<std::string>& value, const std::string& field,
                                       bool must_exist = true) {
    if (!value) throw ConfigError("config field '" + field + "' is required");
    if (must_exist && !std::filesystem::exists(*value)) {
        throw ConfigError("config field '" + field + "': path does not exist: " + *value);
    }
    return *value;
}

}  // namespace qexp
