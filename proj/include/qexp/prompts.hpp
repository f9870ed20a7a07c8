#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qexp/error.hpp"
#include "qexp/text.hpp"
#include "qexp/utf8.hpp"

namespace qexp {

enum class TemplateId { Q2D, Q2D_ZS, Q2D_PRF, Q2E, Q2E_ZS, Q2E_PRF, CoT, CoT_PRF };

inline constexpr std::array kAllTemplates = {TemplateId::Q2D, TemplateId::Q2D_ZS, TemplateId::Q2D_PRF,
                                             TemplateId::Q2E, TemplateId::Q2E_ZS, TemplateId::Q2E_PRF,
                                             TemplateId::CoT, TemplateId::CoT_PRF};

/// Display name, e.g. "Q2D/ZS".
inline std::string_view display_name(TemplateId id) {
    switch (id) {
        case TemplateId::Q2D: return "Q2D";
        case TemplateId::Q2D_ZS: return "Q2D/ZS";
        case TemplateId::Q2D_PRF: return "Q2D/PRF";
        case TemplateId::Q2E: return "Q2E";
        case TemplateId::Q2E_ZS: return "Q2E/ZS";
        case TemplateId::Q2E_PRF: return "Q2E/PRF";
        case TemplateId::CoT: return "CoT";
        case TemplateId::CoT_PRF: return "CoT/PRF";
    }
    return "?";
}

/// Machine name, e.g. "q2d_zs".
inline std::string to_string(TemplateId id) {
    std::string s(display_name(id));
    for (auto& c : s) c = c == '/' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Accepts either form, case-insensitively ("cot_prf", "CoT/PRF").
inline TemplateId parse_template_id(std::string_view s) {
    std::string norm(s);
    for (auto& c : norm) c = c == '/' || c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto id : kAllTemplates) {
        if (to_string(id) == norm) return id;
    }
    throw ConfigError("unknown prompt template '" + std::string(s) + "'");
}

inline bool is_few_shot(TemplateId id) { return id == TemplateId::Q2D || id == TemplateId::Q2E; }

inline bool uses_prf(TemplateId id) {
    return id == TemplateId::Q2D_PRF || id == TemplateId::Q2E_PRF || id == TemplateId::CoT_PRF;
}

inline bool is_cot(TemplateId id) { return id == TemplateId::CoT || id == TemplateId::CoT_PRF; }

inline bool is_keyword_family(TemplateId id) {
    return id == TemplateId::Q2E || id == TemplateId::Q2E_ZS || id == TemplateId::Q2E_PRF;
}

/// Placeholder body for a template. `n` is the number of few-shot examples
/// for Q2D/Q2E or the number of context documents for the /PRF variants, and
/// is ignored otherwise.
inline std::string template_body(TemplateId id, std::size_t n) {
    const auto shots = [n](std::string_view instruction, std::string_view label, std::string_view slot) {
        std::string s(instruction);
        s += "\n\n";
        for (std::size_t i = 1; i <= n; ++i) {
            s += "Query: {query " + std::to_string(i) + "}\n" + std::string(label) + ": {" + std::string(slot) + " " +
                 std::to_string(i) + "}\n\n";
        }
        s += "Query: {query}\n" + std::string(label) + ":";
        return s;
    };
    const auto context = [n] {
        std::string s = "Context: ";
        for (std::size_t i = 1; i <= n; ++i) {
            if (i > 1) s += "\n";
            s += "{PRF doc " + std::to_string(i) + "}";
        }
        return s + "\n";
    };
    switch (id) {
        case TemplateId::Q2D:
            return shots("Write a passage that answers the given query:", "Passage", "doc");
        case TemplateId::Q2D_ZS:
            return "Write a passage that answers the following query: {query}";
        case TemplateId::Q2D_PRF:
            return "Write a passage that answers the given query based on\nthe context:\n\n" + context() +
                   "Query: {query}\nPassage:";
        case TemplateId::Q2E:
            return shots("Write a list of keywords for the given query:", "Keywords", "expansion");
        case TemplateId::Q2E_ZS:
            return "Write a list of keywords for the following query: {query}";
        case TemplateId::Q2E_PRF:
            return "Write a list of keywords for the given query based on\nthe context:\n\n" + context() +
                   "Query: {query}\nKeywords:";
        case TemplateId::CoT:
            return "Answer the following query:\n\n{query}\n\nGive the rationale before answering";
        case TemplateId::CoT_PRF:
            return "Answer the following query based on the context:\n\n" + context() +
                   "Query: {query}\n\nGive the rationale before answering";
    }
    return {};
}

/// Single-pass `{name}` substitution. Substituted values are not rescanned;
/// a placeholder without a value is an error.
inline std::string render_placeholders(std::string_view body, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < body.size()) {
        const auto open = body.find('{', i);
        if (open == std::string_view::npos) {
            out.append(body.substr(i));
            break;
        }
        const auto close = body.find('}', open);
        if (close == std::string_view::npos) throw Error("unterminated placeholder in prompt template");
        out.append(body.substr(i, open - i));
        const std::string name(body.substr(open + 1, close - open - 1));
        auto it = values.find(name);
        if (it == values.end()) throw Error("no value for prompt placeholder {" + name + "}");
        out += it->second;
        i = close + 1;
    }
    return out;
}

struct FewShotExample {
    std::string query;
    std::string passage;
    std::vector<std::string> expansion_terms;

    bool operator==(const FewShotExample&) const = default;
};

inline constexpr std::size_t kFewShotCount = 4;
inline constexpr std::size_t kMaxFewShotTerms = 20;

struct FewShotSet {
    std::vector<FewShotExample> examples;

    void validate() const {
        if (examples.size() != kFewShotCount) {
            throw DataError("few-shot set must hold exactly " + std::to_string(kFewShotCount) + " examples, got " +
                            std::to_string(examples.size()));
        }
        for (const auto& e : examples) {
            if (e.expansion_terms.size() > kMaxFewShotTerms) {
                throw DataError("few-shot expansion for '" + e.query + "' exceeds " + std::to_string(kMaxFewShotTerms) +
                                " terms");
            }
        }
    }
};

/// jsonl of {"query", "passage", "expansion_terms": [..]}.
inline FewShotSet read_fewshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open few-shot file " + path);
    FewShotSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            set.examples.push_back({j.at("query").get<std::string>(), j.at("passage").get<std::string>(),
                                    j.at("expansion_terms").get<std::vector<std::string>>()});
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ": malformed few-shot record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    set.validate();
    return set;
}

inline void write_fewshot(std::ostream& out, const FewShotSet& set) {
    for (const auto& e : set.examples) {
        nlohmann::ordered_json j;
        j["query"] = e.query;
        j["passage"] = e.passage;
        j["expansion_terms"] = e.expansion_terms;
        out << j.dump() << '\n';
    }
}

struct PromptOptions {
    // Whitespace-token budget for few-shot prompts; 0 disables the check.
    std::size_t context_budget_tokens = 0;
    // Per-document byte budget for /PRF context passages.
    std::size_t prf_doc_chars = 1000;
};

struct PromptInstance {
    TemplateId template_id = TemplateId::CoT;
    std::string query_id;
    std::string query;
    std::size_t shots = 0;
    std::vector<std::string> context_docs;  // after truncation
    std::string text;
};

inline std::size_t estimate_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

/// Renders a template for one query. Few-shot examples are required exactly
/// for Q2D/Q2E and context documents exactly for the /PRF variants; at most
/// three documents are used, each cut to `options.prf_doc_chars` bytes.
inline PromptInstance build_prompt(TemplateId id, const Topic& topic, const FewShotSet* few_shot,
                                   const std::vector<std::string>* prf_docs, const PromptOptions& options = {}) {
    if (is_few_shot(id) != (few_shot != nullptr)) {
        throw ConfigError(std::string(display_name(id)) +
                          (few_shot ? " does not take few-shot examples" : " requires few-shot examples"));
    }
    if (uses_prf(id) != (prf_docs != nullptr)) {
        throw ConfigError(std::string(display_name(id)) +
                          (prf_docs ? " does not take context documents" : " requires context documents"));
    }
    PromptInstance p;
    p.template_id = id;
    p.query_id = topic.query_id;
    p.query = topic.text;

    std::map<std::string, std::string> values{{"query", topic.text}};
    std::size_t n = 0;
    if (few_shot != nullptr) {
        few_shot->validate();
        for (std::size_t i = 0; i < few_shot->examples.size(); ++i) {
            const auto& e = few_shot->examples[i];
            const auto k = std::to_string(i + 1);
            values["query " + k] = e.query;
            values["doc " + k] = e.passage;
            std::string joined;
            for (const auto& t : e.expansion_terms) joined += (joined.empty() ? "" : ", ") + t;
            values["expansion " + k] = joined;
        }
        n = few_shot->examples.size();
        if (options.context_budget_tokens > 0 &&
            estimate_tokens(render_placeholders(template_body(id, n), values)) > options.context_budget_tokens) {
            n = 3;
        }
        p.shots = n;
    }
    if (prf_docs != nullptr) {
        n = std::min<std::size_t>(prf_docs->size(), 3);
        for (std::size_t i = 0; i < n; ++i) {
            p.context_docs.emplace_back(utf8::truncate((*prf_docs)[i], options.prf_doc_chars));
            values["PRF doc " + std::to_string(i + 1)] = p.context_docs.back();
        }
    }
    p.text = render_placeholders(template_body(id, n), values);
    return p;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace detail

/// Splits after '.', '!' or '?' when followed by whitespace or the end.
inline std::vector<std::string_view> split_sentences(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!detail::is_terminator(text[i])) continue;
        if (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            out.push_back(text.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < text.size()) out.push_back(text.substr(start));
    return out;
}

/// Removes the closing-answer sentences chain-of-thought completions tend to
/// end with and rejoins the rest with single spaces.
inline std::string filter_cot(std::string_view completion) {
    static constexpr std::array<std::string_view, 2> kMarkers = {"The final answer:", "So the final answer is"};
    std::string out;
    for (auto sentence : split_sentences(completion)) {
        sentence = detail::trim(sentence);
        if (sentence.empty()) continue;
        bool drop = false;
        for (auto m : kMarkers) drop = drop || sentence.starts_with(m);
        if (drop) continue;
        if (!out.empty()) out += ' ';
        out += sentence;
    }
    return out;
}

inline constexpr int kQueryRepeats = 5;

struct ExpandedQuery {
    std::string query_id;
    std::string text;

    bool operator==(const ExpandedQuery&) const = default;
};

/// Five copies of the query followed by the completion, space separated.
inline ExpandedQuery expand_query(const Topic& topic, std::string_view completion) {
    ExpandedQuery q{topic.query_id, {}};
    for (int i = 0; i < kQueryRepeats; ++i) {
        if (i > 0) q.text += ' ';
        q.text += topic.text;
    }
    if (!completion.empty()) {
        q.text += ' ';
        q.text += completion;
    }
    return q;
}

}  // namespace qexp
