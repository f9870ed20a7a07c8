#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qexp/error.hpp"
#include "qexp/index.hpp"
#include "qexp/text.hpp"

namespace qexp {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    double k3 = 8.0;

    void validate() const {
        if (!(k1 > 0.0)) throw ConfigError("bm25.k1 must be > 0");
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25.b must be in [0, 1]");
        if (!(k3 >= 0.0)) throw ConfigError("bm25.k3 must be >= 0");
    }
};

struct QueryTerm {
    std::uint32_t qtf = 1;
    // Set by feedback reweighting; replaces the qtf saturation factor.
    std::optional<double> weight;

    bool operator==(const QueryTerm&) const = default;
};

struct WeightedQuery {
    std::string query_id;
    std::map<std::string, QueryTerm, std::less<>> terms;

    std::uint32_t max_qtf() const {
        std::uint32_t m = 0;
        for (const auto& [t, q] : terms) m = std::max(m, q.qtf);
        return m;
    }

    bool operator==(const WeightedQuery&) const = default;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Ranking for one query, ordered by (score desc, doc_id asc).
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    bool operator==(const RankedList&) const = default;
};

inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Analyzes the topic text and counts term multiplicities.
inline WeightedQuery make_weighted_query(const Topic& topic, const AnalyzerConfig& config) {
    WeightedQuery wq{topic.query_id, {}};
    for (auto& tok : analyze(topic.text, config)) {
        auto [it, inserted] = wq.terms.try_emplace(std::move(tok));
        if (!inserted) ++it->second.qtf;
    }
    if (wq.terms.empty()) throw DataError("empty analyzed query for '" + topic.query_id + "'");
    return wq;
}

/// ((k3+1)·x)/(k3+x): increasing in x, bounded above by k3+1.
inline double qtf_saturation(double x, double k3) { return ((k3 + 1.0) * x) / (k3 + x); }

/// Robertson-Sparck Jones idf, base 2. Negative for terms in more than half
/// the collection.
inline double bm25_idf(std::uint64_t num_docs, std::uint64_t df) {
    const double n = static_cast<double>(num_docs);
    const double d = static_cast<double>(df);
    return std::log2((n - d + 0.5) / (d + 0.5));
}

inline double bm25_tf(double tf, double doc_len, double avg_len, const Bm25Params& p) {
    return ((p.k1 + 1.0) * tf) / (p.k1 * ((1.0 - p.b) + p.b * doc_len / avg_len) + tf);
}

/// Query-side factor of a term. Reweighted terms use their weight directly;
/// otherwise qtf is taken relative to the query's largest qtf and saturated
/// with k3, so repeating every term of a query the same number of times
/// leaves all scores unchanged.
inline double query_term_factor(const QueryTerm& q, std::uint32_t max_qtf, const Bm25Params& p) {
    if (q.weight) return *q.weight;
    return qtf_saturation(static_cast<double>(q.qtf) / static_cast<double>(max_qtf), p.k3);
}

namespace detail {

struct ScoringTerm {
    std::span<const Posting> postings;
    double query_factor = 0.0;
    double idf = 0.0;
};

inline std::vector<ScoringTerm> scoring_terms(const Index& index, const WeightedQuery& wq, const Bm25Params& p) {
    std::vector<ScoringTerm> out;
    const auto max_qtf = wq.max_qtf();
    for (const auto& [term, q] : wq.terms) {
        auto list = index.postings(term);
        if (list.empty()) continue;
        out.push_back({list, query_term_factor(q, max_qtf, p), bm25_idf(index.stats().num_docs, list.size())});
    }
    return out;
}

}  // namespace detail

/// Okapi BM25 score of one document. Terms absent from the document
/// contribute nothing.
inline double score_document(const Index& index, const WeightedQuery& wq, std::uint32_t ordinal,
                             const Bm25Params& params) {
    if (ordinal >= index.num_docs()) throw DataError("unknown document ordinal " + std::to_string(ordinal));
    const double len = index.doc_length(ordinal);
    const double avg = index.stats().avg_doc_len;
    double score = 0.0;
    for (const auto& t : detail::scoring_terms(index, wq, params)) {
        auto it = std::lower_bound(t.postings.begin(), t.postings.end(), ordinal,
                                   [](const Posting& p, std::uint32_t o) { return p.doc < o; });
        if (it == t.postings.end() || it->doc != ordinal) continue;
        score += t.query_factor * t.idf * bm25_tf(it->tf, len, avg, params);
    }
    return score;
}

/// Top-k documents with positive score. Term-at-a-time accumulation in the
/// query's term order, so scores are bit-identical to score_document().
inline RankedList search(const Index& index, const WeightedQuery& wq, std::size_t k, const Bm25Params& params) {
    if (k == 0) throw ConfigError("search cutoff k must be >= 1");
    RankedList out{wq.query_id, {}};
    const auto terms = detail::scoring_terms(index, wq, params);
    if (terms.empty()) return out;

    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> seen(index.num_docs(), false);
    const double avg = index.stats().avg_doc_len;
    for (const auto& t : terms) {
        for (const auto& p : t.postings) {
            acc[p.doc] += t.query_factor * t.idf * bm25_tf(p.tf, index.doc_length(p.doc), avg, params);
            if (!seen[p.doc]) {
                seen[p.doc] = true;
                touched.push_back(p.doc);
            }
        }
    }

    std::vector<ScoredDoc> hits;
    for (auto d : touched) {
        if (acc[d] > 0.0) hits.push_back({index.doc_id(d), acc[d]});
    }
    const auto top = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top), hits.end(), ranks_before);
    hits.resize(top);
    out.entries = std::move(hits);
    return out;
}

}  // namespace qexp
