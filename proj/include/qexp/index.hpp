#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "qexp/error.hpp"
#include "qexp/text.hpp"

namespace qexp {

struct Posting {
    std::uint32_t doc = 0;  // ordinal
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

struct TermStats {
    std::uint64_t df = 0;  // documents containing the term
    std::uint64_t cf = 0;  // occurrences in the collection
};

struct IndexStats {
    std::uint64_t num_docs = 0;
    std::uint64_t num_tokens = 0;
    std::uint64_t num_terms = 0;
    double avg_doc_len = 0.0;

    bool operator==(const IndexStats&) const = default;
};

inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Immutable inverted index. Documents get ordinals in ingest order; the
/// vocabulary is kept sorted so the on-disk form is deterministic.
class Index {
public:
    /// Builds from documents in order. `threads` > 1 analyzes documents in
    /// parallel; the result does not depend on scheduling.
    static Index build(std::span<const Document> docs, AnalyzerConfig config, unsigned threads = 1) {
        if (docs.empty()) throw DataError("cannot build an index from zero documents");
        Index idx;
        idx.analyzer_ = std::move(config);

        std::vector<std::vector<std::string>> analyzed(docs.size());
        const auto analyze_range = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) analyzed[i] = analyze(docs[i].analysis_text(), idx.analyzer_);
        };
        threads = std::max(1u, threads);
        if (threads == 1 || docs.size() < 2 * threads) {
            analyze_range(0, docs.size());
        } else {
            std::vector<std::future<void>> parts;
            const std::size_t chunk = (docs.size() + threads - 1) / threads;
            for (std::size_t lo = 0; lo < docs.size(); lo += chunk) {
                parts.push_back(std::async(std::launch::async, analyze_range, lo, std::min(docs.size(), lo + chunk)));
            }
            for (auto& p : parts) p.get();
        }

        std::unordered_map<std::string, std::uint32_t> ids;
        std::vector<std::string> terms;
        std::vector<std::vector<Posting>> lists;
        std::unordered_map<std::string, std::uint32_t> doc_ordinals;
        for (std::size_t ord = 0; ord < docs.size(); ++ord) {
            const auto& d = docs[ord];
            if (d.doc_id.empty()) throw DataError("empty doc_id at ordinal " + std::to_string(ord));
            if (!doc_ordinals.emplace(d.doc_id, static_cast<std::uint32_t>(ord)).second) {
                throw DataError("duplicate doc_id '" + d.doc_id + "'");
            }
            std::map<std::string_view, std::uint32_t> counts;
            for (const auto& t : analyzed[ord]) ++counts[t];
            for (const auto& [term, tf] : counts) {
                auto [it, inserted] = ids.try_emplace(std::string(term), static_cast<std::uint32_t>(terms.size()));
                if (inserted) {
                    terms.emplace_back(term);
                    lists.emplace_back();
                }
                lists[it->second].push_back({static_cast<std::uint32_t>(ord), tf});
            }
            idx.doc_ids_.push_back(d.doc_id);
            idx.doc_texts_.push_back(d.analysis_text());
            idx.doc_lengths_.push_back(static_cast<std::uint32_t>(analyzed[ord].size()));
        }

        std::vector<std::uint32_t> order(terms.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return terms[a] < terms[b]; });
        for (auto id : order) {
            idx.terms_.push_back(std::move(terms[id]));
            idx.postings_.push_back(std::move(lists[id]));
        }
        idx.finalize();
        return idx;
    }

    const IndexStats& stats() const { return stats_; }
    const AnalyzerConfig& analyzer() const { return analyzer_; }
    std::string fingerprint() const { return analyzer_.fingerprint(); }

    std::size_t num_docs() const { return doc_ids_.size(); }

    /// Sorted vocabulary.
    std::span<const std::string> terms() const { return terms_; }

    /// Exact postings for an analyzed term; empty for unseen terms.
    std::span<const Posting> postings(std::string_view term) const {
        const auto id = term_id(term);
        if (!id) return {};
        return postings_[*id];
    }

    TermStats term_stats(std::string_view term) const {
        const auto id = term_id(term);
        if (!id) return {};
        return term_stats_[*id];
    }

    /// Term frequency of `term` in document `ordinal` (0 when absent).
    std::uint32_t tf(std::string_view term, std::uint32_t ordinal) const {
        const auto list = postings(term);
        auto it = std::lower_bound(list.begin(), list.end(), ordinal,
                                   [](const Posting& p, std::uint32_t o) { return p.doc < o; });
        return it != list.end() && it->doc == ordinal ? it->tf : 0;
    }

    std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
    const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
    const std::string& doc_text(std::uint32_t ordinal) const { return doc_texts_.at(ordinal); }

    std::optional<std::uint32_t> ordinal(std::string_view doc_id) const {
        auto it = ordinals_.find(std::string(doc_id));
        if (it == ordinals_.end()) return std::nullopt;
        return it->second;
    }

    // Derived tables are rebuilt by finalize() and need no comparison.
    bool operator==(const Index& o) const {
        return fingerprint() == o.fingerprint() && analyzer_.stopwords == o.analyzer_.stopwords &&
               doc_ids_ == o.doc_ids_ && doc_lengths_ == o.doc_lengths_ && doc_texts_ == o.doc_texts_ &&
               terms_ == o.terms_ && postings_ == o.postings_ && stats_ == o.stats_;
    }

    /// Writes `manifest.txt`, `stopwords.txt` and `index.bin` into `dir`,
    /// creating it if needed. Output bytes depend only on the index contents.
    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        {
            std::ofstream m(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
            m << "format_version=" << kIndexFormatVersion << '\n'
              << "N=" << stats_.num_docs << '\n'
              << "token_c=" << stats_.num_tokens << '\n'
              << "terms=" << stats_.num_terms << '\n'
              << "analyzer_fingerprint=" << fingerprint() << '\n'
              << "lowercase=" << (analyzer_.lowercase ? "true" : "false") << '\n'
              << "stemmer=" << to_string(analyzer_.stemmer) << '\n'
              << "stopwords=" << analyzer_.stopwords_name << '\n';
            if (!m) throw DataError("cannot write manifest in " + dir.string());
        }
        {
            std::ofstream s(dir / "stopwords.txt", std::ios::binary | std::ios::trunc);
            for (const auto& w : analyzer_.stopwords) s << w << '\n';
        }
        std::ofstream out(dir / "index.bin", std::ios::binary | std::ios::trunc);
        Writer w{out};
        w.bytes(kMagic);
        w.u32(kIndexFormatVersion);
        w.u64(doc_ids_.size());
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
            w.str(doc_ids_[i]);
            w.u32(doc_lengths_[i]);
            w.str(doc_texts_[i]);
        }
        w.u64(terms_.size());
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            w.str(terms_[t]);
            w.u64(postings_[t].size());
            for (const auto& p : postings_[t]) {
                w.u32(p.doc);
                w.u32(p.tf);
            }
        }
        if (!out) throw DataError("cannot write index.bin in " + dir.string());
    }

    /// Loads an index written by save(). When `expected` is given its
    /// fingerprint must match the stored analyzer.
    static Index load(const std::filesystem::path& dir, const AnalyzerConfig* expected = nullptr) {
        const auto manifest = read_manifest(dir);
        const auto field = [&](const std::string& key) -> const std::string& {
            auto it = manifest.find(key);
            if (it == manifest.end()) throw DataError(dir.string() + ": manifest lacks '" + key + "'");
            return it->second;
        };
        if (field("format_version") != std::to_string(kIndexFormatVersion)) {
            throw DataError(dir.string() + ": unsupported index format_version " + field("format_version"));
        }
        Index idx;
        idx.analyzer_.lowercase = field("lowercase") == "true";
        idx.analyzer_.stemmer = parse_stemmer(field("stemmer"));
        idx.analyzer_.stopwords_name = field("stopwords");
        if (std::filesystem::exists(dir / "stopwords.txt")) {
            idx.analyzer_.stopwords = read_stopword_file((dir / "stopwords.txt").string());
        }
        if (idx.fingerprint() != field("analyzer_fingerprint")) {
            throw DataError(dir.string() + ": stored analyzer does not match manifest fingerprint");
        }
        if (expected != nullptr && expected->fingerprint() != idx.fingerprint()) {
            throw DataError(dir.string() + ": analyzer fingerprint mismatch (index " + idx.fingerprint() +
                            ", requested " + expected->fingerprint() + ")");
        }

        std::ifstream in(dir / "index.bin", std::ios::binary);
        if (!in) throw DataError(dir.string() + ": missing index.bin");
        Reader r{in, (dir / "index.bin").string()};
        if (r.bytes(kMagic.size()) != kMagic) throw DataError(dir.string() + ": index.bin has a bad header");
        if (r.u32() != kIndexFormatVersion) throw DataError(dir.string() + ": index.bin version mismatch");
        const auto n = r.u64();
        for (std::uint64_t i = 0; i < n; ++i) {
            idx.doc_ids_.push_back(r.str());
            idx.doc_lengths_.push_back(r.u32());
            idx.doc_texts_.push_back(r.str());
        }
        const auto v = r.u64();
        for (std::uint64_t t = 0; t < v; ++t) {
            idx.terms_.push_back(r.str());
            std::vector<Posting> list(r.u64());
            for (auto& p : list) {
                p.doc = r.u32();
                p.tf = r.u32();
                if (p.doc >= n || p.tf == 0) throw DataError(dir.string() + ": corrupt posting list");
            }
            idx.postings_.push_back(std::move(list));
        }
        idx.finalize();
        if (std::to_string(idx.stats_.num_docs) != field("N") || std::to_string(idx.stats_.num_tokens) != field("token_c")) {
            throw DataError(dir.string() + ": manifest statistics disagree with index.bin");
        }
        return idx;
    }

private:
    static constexpr std::string_view kMagic = "QEXPIDX\n";

    Index() = default;

    std::optional<std::uint32_t> term_id(std::string_view term) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
        if (it == terms_.end() || *it != term) return std::nullopt;
        return static_cast<std::uint32_t>(it - terms_.begin());
    }

    void finalize() {
        stats_.num_docs = doc_ids_.size();
        stats_.num_tokens = std::accumulate(doc_lengths_.begin(), doc_lengths_.end(), std::uint64_t{0});
        stats_.num_terms = terms_.size();
        stats_.avg_doc_len = stats_.num_docs == 0 ? 0.0
                                                  : static_cast<double>(stats_.num_tokens) /
                                                        static_cast<double>(stats_.num_docs);
        term_stats_.clear();
        for (const auto& list : postings_) {
            TermStats ts{list.size(), 0};
            for (const auto& p : list) ts.cf += p.tf;
            term_stats_.push_back(ts);
        }
        ordinals_.clear();
        for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) {
            if (!ordinals_.emplace(doc_ids_[i], i).second) throw DataError("duplicate doc_id '" + doc_ids_[i] + "'");
        }
    }

    static std::map<std::string, std::string> read_manifest(const std::filesystem::path& dir) {
        std::ifstream in(dir / "manifest.txt");
        if (!in) throw DataError(dir.string() + ": no index manifest found");
        std::map<std::string, std::string> kv;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw DataError(dir.string() + ": malformed manifest line '" + line + "'");
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return kv;
    }

    // Little-endian fixed-width encoding.
    struct Writer {
        std::ostream& out;
        void bytes(std::string_view s) { out.write(s.data(), static_cast<std::streamsize>(s.size())); }
        void u32(std::uint32_t v) {
            char b[4];
            for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
            out.write(b, 4);
        }
        void u64(std::uint64_t v) {
            char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
            out.write(b, 8);
        }
        void str(std::string_view s) {
            u64(s.size());
            bytes(s);
        }
    };

    struct Reader {
        std::istream& in;
        std::string path;
        std::string bytes(std::size_t n) {
            std::string s(n, '\0');
            if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError(path + ": truncated");
            return s;
        }
        std::uint64_t le(int width) {
            unsigned char b[8];
            if (!in.read(reinterpret_cast<char*>(b), width)) throw DataError(path + ": truncated");
            std::uint64_t v = 0;
            for (int i = width - 1; i >= 0; --i) v = (v << 8) | b[i];
            return v;
        }
        std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
        std::uint64_t u64() { return le(8); }
        std::string str() { return bytes(u64()); }
    };

    AnalyzerConfig analyzer_;
    IndexStats stats_;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<TermStats> term_stats_;
    std::vector<std::string> doc_ids_;
    std::vector<std::string> doc_texts_;
    std::vector<std::uint32_t> doc_lengths_;
    std::unordered_map<std::string, std::uint32_t> ordinals_;
};

}  // namespace qexp
