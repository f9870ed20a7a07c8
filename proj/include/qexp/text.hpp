#pragma once

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "qexp/error.hpp"
#include "qexp/hash.hpp"
#include "qexp/porter.hpp"
#include "qexp/stopwords.hpp"
#include "qexp/utf8.hpp"

namespace qexp {

struct Document {
    std::string doc_id;
    std::string text;
    std::optional<std::string> title;

    /// Text fed to the analyzer: title, a single space, then the body.
    std::string analysis_text() const { return title ? *title + " " + text : text; }

    bool operator==(const Document&) const = default;
};

struct Topic {
    std::string query_id;
    std::string text;

    bool operator==(const Topic&) const = default;
};

enum class Stemmer { None, Porter };

inline std::string_view to_string(Stemmer s) { return s == Stemmer::Porter ? "porter" : "none"; }

inline Stemmer parse_stemmer(std::string_view s) {
    if (s == "porter") return Stemmer::Porter;
    if (s == "none") return Stemmer::None;
    throw ConfigError("unknown stemmer '" + std::string(s) + "' (expected porter|none)");
}

/// Tokenizer settings. Tokens are maximal runs of ASCII letters, digits, and
/// non-ASCII bytes; everything else separates tokens.
struct AnalyzerConfig {
    bool lowercase = true;
    std::set<std::string> stopwords;
    std::string stopwords_name = "none";
    Stemmer stemmer = Stemmer::None;

    /// Lowercase, bundled English stopwords, Porter stemming.
    static AnalyzerConfig english() {
        AnalyzerConfig c;
        c.stopwords = {kEnglishStopwords.begin(), kEnglishStopwords.end()};
        c.stopwords_name = std::string(kEnglishStopwordsVersion);
        c.stemmer = Stemmer::Porter;
        return c;
    }

    /// Lowercase only; no stopwords, no stemming.
    static AnalyzerConfig plain() { return AnalyzerConfig{}; }

    /// Stable digest of everything that affects tokenization.
    std::string fingerprint() const {
        std::string canon = "lowercase=" + std::string(lowercase ? "1" : "0") +
                            "\nstemmer=" + std::string(to_string(stemmer)) + "\nstopwords=";
        for (const auto& w : stopwords) {
            canon += w;
            canon += '\n';
        }
        return sha256_hex(canon);
    }

    bool operator==(const AnalyzerConfig&) const = default;
};

/// Reads one word per line; blank lines and lines starting with '#' are skipped.
inline std::set<std::string> read_stopword_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open stopword file " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        out.insert(line);
    }
    return out;
}

namespace detail {

inline bool is_token_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

inline bool is_lower_alpha(std::string_view s) {
    for (char c : s) {
        if (c < 'a' || c > 'z') return false;
    }
    return true;
}

}  // namespace detail

/// Splits on non-alphanumeric runs, lowercases, drops stopwords, then stems.
/// Pure; safe to call concurrently.
inline std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
    std::vector<std::string> tokens;
    static const PorterStemmer stem;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !detail::is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && detail::is_token_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string tok(text.substr(start, i - start));
        if (config.lowercase) {
            for (char& c : tok) {
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            }
        }
        if (config.stopwords.contains(tok)) continue;
        if (config.stemmer == Stemmer::Porter && detail::is_lower_alpha(tok)) tok = stem(tok);
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

enum class CorpusFormat { Tsv, Jsonl };

inline CorpusFormat parse_corpus_format(std::string_view s) {
    if (s == "tsv") return CorpusFormat::Tsv;
    if (s == "jsonl") return CorpusFormat::Jsonl;
    throw ConfigError("unknown corpus format '" + std::string(s) + "' (expected tsv|jsonl)");
}

inline std::string_view to_string(CorpusFormat f) { return f == CorpusFormat::Tsv ? "tsv" : "jsonl"; }

namespace detail {

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline void check_utf8(const std::string& line, const std::string& path, std::size_t line_no) {
    if (!utf8::is_valid(line)) {
        throw DataError(path + ": invalid UTF-8 at line " + std::to_string(line_no));
    }
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return in;
}

}  // namespace detail

/// Single-pass reader over a corpus file. Yields documents in file order and
/// rejects duplicate ids.
class CorpusReader {
public:
    CorpusReader(std::string path, CorpusFormat format)
        : path_(std::move(path)), format_(format), in_(detail::open_input(path_)) {}

    std::optional<Document> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            detail::strip_cr(line);
            if (line.empty() && in_.peek() == std::char_traits<char>::eof()) break;
            detail::check_utf8(line, path_, line_no_);
            Document doc = format_ == CorpusFormat::Tsv ? parse_tsv(line) : parse_jsonl(line);
            if (!seen_.insert(doc.doc_id).second) {
                throw DataError(path_ + ": duplicate doc_id '" + doc.doc_id + "' at line " +
                                std::to_string(line_no_));
            }
            return doc;
        }
        return std::nullopt;
    }

private:
    DataError malformed() const {
        return DataError(path_ + ": malformed record at line " + std::to_string(line_no_));
    }

    Document parse_tsv(const std::string& line) const {
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
            throw malformed();
        }
        return Document{line.substr(0, tab), line.substr(tab + 1), std::nullopt};
    }

    Document parse_jsonl(const std::string& line) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw malformed();
        }
        if (!j.is_object() || !j.contains("_id") || !j["_id"].is_string() || !j.contains("text") ||
            !j["text"].is_string()) {
            throw malformed();
        }
        Document doc{j["_id"].get<std::string>(), j["text"].get<std::string>(), std::nullopt};
        if (doc.doc_id.empty()) throw malformed();
        if (j.contains("title")) {
            if (!j["title"].is_string()) throw malformed();
            doc.title = j["title"].get<std::string>();
        }
        return doc;
    }

    std::string path_;
    CorpusFormat format_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
    std::unordered_set<std::string> seen_;
};

inline std::vector<Document> read_corpus(const std::string& path, CorpusFormat format) {
    CorpusReader reader(path, format);
    std::vector<Document> docs;
    while (auto d = reader.next()) docs.push_back(std::move(*d));
    return docs;
}

inline void write_corpus(const std::string& path, const std::vector<Document>& docs, CorpusFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& d : docs) {
        if (format == CorpusFormat::Tsv) {
            if (d.title || d.doc_id.find_first_of("\t\n") != std::string::npos ||
                d.text.find_first_of("\t\n") != std::string::npos) {
                throw DataError("document '" + d.doc_id + "' is not representable as tsv");
            }
            out << d.doc_id << '\t' << d.text << '\n';
        } else {
            nlohmann::ordered_json j;
            j["_id"] = d.doc_id;
            if (d.title) j["title"] = *d.title;
            j["text"] = d.text;
            out << j.dump() << '\n';
        }
    }
}

inline std::vector<Topic> read_topics(const std::string& path) {
    auto in = detail::open_input(path);
    std::vector<Topic> topics;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        detail::check_utf8(line, path, line_no);
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
            throw DataError(path + ": malformed topic at line " + std::to_string(line_no));
        }
        Topic t{line.substr(0, tab), line.substr(tab + 1)};
        if (t.text.find_first_not_of(" \t") == std::string::npos) {
            throw DataError(path + ": empty query text for '" + t.query_id + "' at line " + std::to_string(line_no));
        }
        if (!seen.insert(t.query_id).second) {
            throw DataError(path + ": duplicate query id '" + t.query_id + "' at line " + std::to_string(line_no));
        }
        topics.push_back(std::move(t));
    }
    return topics;
}

inline void write_topics(const std::string& path, const std::vector<Topic>& topics) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& t : topics) out << t.query_id << '\t' << t.text << '\n';
}

/// Relevance judgments: query id -> doc id -> grade (>= 0).
class Qrels {
public:
    using Judgments = std::map<std::string, int, std::less<>>;

    void add(const std::string& query_id, const std::string& doc_id, int grade) {
        if (grade < 0) throw DataError("negative grade for (" + query_id + ", " + doc_id + ")");
        if (!by_query_[query_id].emplace(doc_id, grade).second) {
            throw DataError("duplicate judgment for (" + query_id + ", " + doc_id + ")");
        }
    }

    /// nullptr when the query has no judgments at all.
    const Judgments* judgments(std::string_view query_id) const {
        auto it = by_query_.find(query_id);
        return it == by_query_.end() ? nullptr : &it->second;
    }

    int grade(std::string_view query_id, std::string_view doc_id) const {
        const auto* j = judgments(query_id);
        if (j == nullptr) return 0;
        auto it = j->find(doc_id);
        return it == j->end() ? 0 : it->second;
    }

    std::size_t num_relevant(std::string_view query_id) const {
        const auto* j = judgments(query_id);
        if (j == nullptr) return 0;
        std::size_t n = 0;
        for (const auto& [doc, g] : *j) n += g > 0 ? 1 : 0;
        return n;
    }

    const std::map<std::string, Judgments, std::less<>>& all() const { return by_query_; }

private:
    std::map<std::string, Judgments, std::less<>> by_query_;
};

/// TREC qrels: `qid iter docid grade`, whitespace separated.
inline Qrels read_qrels(const std::string& path) {
    auto in = detail::open_input(path);
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        detail::check_utf8(line, path, line_no);
        std::istringstream fields(line);
        std::string qid, iter, docid, grade_str, extra;
        if (!(fields >> qid >> iter >> docid >> grade_str) || (fields >> extra)) {
            throw DataError(path + ": malformed qrels line " + std::to_string(line_no));
        }
        int grade = 0;
        const auto* first = grade_str.data();
        const auto* last = first + grade_str.size();
        auto [ptr, ec] = std::from_chars(first, last, grade);
        if (ec != std::errc() || ptr != last) {
            throw DataError(path + ": non-integer grade '" + grade_str + "' at line " + std::to_string(line_no));
        }
        try {
            qrels.add(qid, docid, grade);
        } catch (const DataError& e) {
            throw DataError(path + ": " + e.what() + " at line " + std::to_string(line_no));
        }
    }
    return qrels;
}

}  // namespace qexp
