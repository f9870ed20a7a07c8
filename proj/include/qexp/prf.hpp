#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/bm25.hpp"
#include "qexp/error.hpp"
#include "qexp/index.hpp"

namespace qexp {

enum class PrfModel { Bo1, Bo2, KL };

inline std::string_view to_string(PrfModel m) {
    switch (m) {
        case PrfModel::Bo1: return "bo1";
        case PrfModel::Bo2: return "bo2";
        case PrfModel::KL: return "kl";
    }
    return "?";
}

inline PrfModel parse_prf_model(std::string_view s) {
    std::string l(s);
    for (auto& c : l) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (l == "bo1") return PrfModel::Bo1;
    if (l == "bo2") return PrfModel::Bo2;
    if (l == "kl") return PrfModel::KL;
    throw ConfigError("unknown feedback model '" + std::string(s) + "' (expected bo1|bo2|kl)");
}

struct PrfConfig {
    std::size_t fb_docs = 3;
    std::size_t fb_terms = 10;
    PrfModel model = PrfModel::Bo1;
    double beta = 0.4;

    void validate() const {
        if (fb_docs < 1) throw ConfigError("prf.fb_docs must be >= 1");
        if (fb_terms < 1) throw ConfigError("prf.fb_terms must be >= 1");
        if (!(beta >= 0.0)) throw ConfigError("prf.beta must be >= 0");
    }
};

struct TermWeight {
    std::string term;
    std::uint64_t tf_x = 0;  // occurrences in the feedback set
    double weight = 0.0;

    bool operator==(const TermWeight&) const = default;
};

/// Selected expansion terms, descending weight, ties by ascending term.
using ExpansionTerms = std::vector<TermWeight>;

// Divergence-from-randomness expansion weights.

/// Bose-Einstein with prior P = F_t / N.
inline double bo1_weight(double tf_x, double cf, double num_docs) {
    const double p = cf / num_docs;
    return tf_x * std::log2((1.0 + p) / p) + std::log2(1.0 + p);
}

/// Bose-Einstein with prior P = F_t · l_x / token_c.
inline double bo2_weight(double tf_x, double cf, double feedback_len, double num_tokens) {
    const double p = cf * feedback_len / num_tokens;
    return tf_x * std::log2((1.0 + p) / p) + std::log2(1.0 + p);
}

/// P_x·log2(P_x/P_c), clamped to 0 when P_x <= P_c.
inline double kl_weight(double tf_x, double feedback_len, double cf, double num_tokens) {
    const double px = tf_x / feedback_len;
    const double pc = cf / num_tokens;
    if (px <= pc) return 0.0;
    return px * std::log2(px / pc);
}

namespace detail {

/// Term counts over a set of token sequences, plus total length.
struct FeedbackCounts {
    std::map<std::string, std::uint64_t, std::less<>> tf;
    std::uint64_t length = 0;
};

inline std::map<std::string, TermWeight> weigh_feedback(const Index& index, const FeedbackCounts& x, PrfModel model) {
    const auto& s = index.stats();
    std::map<std::string, TermWeight> out;
    for (const auto& [term, tf_x] : x.tf) {
        const auto cf = index.term_stats(term).cf;
        if (cf == 0) continue;  // not in the collection vocabulary
        double w = 0.0;
        switch (model) {
            case PrfModel::Bo1:
                w = bo1_weight(static_cast<double>(tf_x), static_cast<double>(cf), static_cast<double>(s.num_docs));
                break;
            case PrfModel::Bo2:
                w = bo2_weight(static_cast<double>(tf_x), static_cast<double>(cf), static_cast<double>(x.length),
                               static_cast<double>(s.num_tokens));
                break;
            case PrfModel::KL:
                w = kl_weight(static_cast<double>(tf_x), static_cast<double>(x.length), static_cast<double>(cf),
                              static_cast<double>(s.num_tokens));
                break;
        }
        out.emplace(term, TermWeight{term, tf_x, w});
    }
    return out;
}

}  // namespace detail

/// Weights every term of the top `fb_docs` documents of `topk` (fewer when
/// the ranking is shorter). Documents are re-analyzed from stored text with
/// the index's analyzer.
inline std::map<std::string, TermWeight> prf_term_weights(const Index& index, const RankedList& topk, PrfModel model,
                                                          std::size_t fb_docs) {
    if (topk.entries.empty()) throw DataError("no feedback documents for query '" + topk.query_id + "'");
    detail::FeedbackCounts x;
    const auto n = std::min(fb_docs, topk.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto ord = index.ordinal(topk.entries[i].doc_id);
        if (!ord) throw DataError("feedback document '" + topk.entries[i].doc_id + "' is not in the index");
        for (auto& tok : analyze(index.doc_text(*ord), index.analyzer())) {
            ++x.tf[tok];
            ++x.length;
        }
    }
    return detail::weigh_feedback(index, x, model);
}

/// Top `fb_terms` by (weight desc, term asc); non-positive weights dropped.
inline ExpansionTerms select_expansion_terms(const std::map<std::string, TermWeight>& weights, std::size_t fb_terms) {
    ExpansionTerms out;
    for (const auto& [t, w] : weights) {
        if (w.weight > 0.0) out.push_back(w);
    }
    std::sort(out.begin(), out.end(), [](const TermWeight& a, const TermWeight& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.term < b.term;
    });
    if (out.size() > fb_terms) out.resize(fb_terms);
    return out;
}

/// Rocchio-style merge: original terms get qtf/max_qtf + beta·w/w_max,
/// expansion-only terms get beta·w/w_max with qtf 1. Empty `exp` returns the
/// query unchanged.
inline WeightedQuery reweight_query(const WeightedQuery& wq, const ExpansionTerms& exp, double beta) {
    if (wq.terms.empty()) throw DataError("cannot reweight an empty query");
    if (exp.empty()) return wq;
    double w_max = 0.0;
    for (const auto& e : exp) w_max = std::max(w_max, e.weight);
    const double max_qtf = wq.max_qtf();

    WeightedQuery out{wq.query_id, {}};
    for (const auto& [term, q] : wq.terms) {
        out.terms[term] = QueryTerm{q.qtf, static_cast<double>(q.qtf) / max_qtf};
    }
    for (const auto& e : exp) {
        const double add = beta * e.weight / w_max;
        auto [it, inserted] = out.terms.try_emplace(e.term, QueryTerm{1, add});
        if (!inserted) *it->second.weight += add;
    }
    return out;
}

struct PrfResult {
    RankedList ranking;
    ExpansionTerms expansion;
    WeightedQuery query;
    bool first_pass_empty = false;
};

/// search -> feedback weights -> term selection -> reweight -> search.
inline PrfResult prf_expand_and_search(const Index& index, const Topic& topic, const Bm25Params& params,
                                       const PrfConfig& prf, std::size_t k) {
    prf.validate();
    auto wq = make_weighted_query(topic, index.analyzer());
    auto first = search(index, wq, prf.fb_docs, params);
    if (first.entries.empty()) return {std::move(first), {}, std::move(wq), true};
    auto weights = prf_term_weights(index, first, prf.model, prf.fb_docs);
    auto exp = select_expansion_terms(weights, prf.fb_terms);
    auto expanded = reweight_query(wq, exp, prf.beta);
    return {search(index, expanded, k, params), std::move(exp), std::move(expanded), false};
}

}  // namespace qexp
