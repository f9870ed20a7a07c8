#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qexp/bm25.hpp"
#include "qexp/index.hpp"
#include "qexp/llm.hpp"
#include "qexp/prf.hpp"
#include "qexp/prompts.hpp"

namespace qexp {

inline constexpr std::size_t kPromptContextDocs = 3;

struct LlmExpansionConfig {
    TemplateId template_id = TemplateId::CoT;
    std::string model = "stub";
    std::optional<DecodeParams> decode;  // per-family default when unset
    PromptOptions prompt;
    std::optional<FewShotSet> few_shot;  // required for Q2D / Q2E

    DecodeParams effective_decode() const { return decode ? *decode : default_decode_params(template_id); }
};

/// Everything produced for one query before the final retrieval.
struct ExpansionTrace {
    PromptInstance prompt;
    LlmResponse response;
    std::string processed;  // completion after CoT filtering (if any)
    ExpandedQuery expanded;
};

/// first-pass context (PRF templates) -> prompt -> completion -> CoT filter
/// -> five-fold query repetition.
inline ExpansionTrace expand_with_llm(const Index& index, const Topic& topic, const LlmExpansionConfig& config,
                                      LlmClient& client, CompletionCache* cache, const Bm25Params& params) {
    std::optional<std::vector<std::string>> context;
    if (uses_prf(config.template_id)) {
        context.emplace();
        const auto first = search(index, make_weighted_query(topic, index.analyzer()), kPromptContextDocs, params);
        for (const auto& e : first.entries) context->push_back(index.doc_text(*index.ordinal(e.doc_id)));
    }
    const FewShotSet* shots = is_few_shot(config.template_id) && config.few_shot ? &*config.few_shot : nullptr;
    ExpansionTrace t;
    t.prompt = build_prompt(config.template_id, topic, shots, context ? &*context : nullptr, config.prompt);
    t.response = complete(client, cache, LlmRequest{config.model, t.prompt.text, config.effective_decode()});
    t.processed = is_cot(config.template_id) ? filter_cot(t.response.text) : t.response.text;
    t.expanded = expand_query(topic, t.processed);
    return t;
}

struct LlmSearchResult {
    ExpansionTrace trace;
    RankedList ranking;
};

inline LlmSearchResult llm_expand_and_search(const Index& index, const Topic& topic, const LlmExpansionConfig& config,
                                             LlmClient& client, CompletionCache* cache, const Bm25Params& params,
                                             std::size_t k) {
    auto trace = expand_with_llm(index, topic, config, client, cache, params);
    const auto wq = make_weighted_query(Topic{topic.query_id, trace.expanded.text}, index.analyzer());
    auto ranking = search(index, wq, k, params);
    return {std::move(trace), std::move(ranking)};
}

/// KL-weighted keywords for a relevant passage, treating the passage alone as
/// the feedback set against the index's collection statistics. Terms absent
/// from the collection are skipped.
inline ExpansionTerms make_fewshot_expansions(std::string_view passage, const Index& index,
                                              std::size_t max_terms = kMaxFewShotTerms) {
    detail::FeedbackCounts x;
    for (auto& tok : analyze(passage, index.analyzer())) {
        ++x.tf[tok];
        ++x.length;
    }
    if (x.length == 0) throw DataError("passage has no indexable terms");
    return select_expansion_terms(detail::weigh_feedback(index, x, PrfModel::KL), max_terms);
}

}  // namespace qexp
