#pragma once

#include <atomic>
#include <exception>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "qexp/bm25.hpp"
#include "qexp/config.hpp"
#include "qexp/index.hpp"
#include "qexp/llm.hpp"
#include "qexp/llm_expansion.hpp"
#include "qexp/prf.hpp"
#include "qexp/run.hpp"

namespace qexp {

/// Caps concurrent requests to the wrapped client.
class BoundedClient : public LlmClient {
public:
    BoundedClient(LlmClient& inner, std::size_t max_in_flight)
        : inner_(inner), slots_(static_cast<std::ptrdiff_t>(max_in_flight)) {}

    LlmResponse generate(const LlmRequest& request) override {
        count_call();
        slots_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{slots_};
        return inner_.generate(request);
    }

private:
    LlmClient& inner_;
    std::counting_semaphore<> slots_;
};

struct QueryIssue {
    enum class Kind { Warning, DataError, EndpointError };
    std::string query_id;
    Kind kind = Kind::Warning;
    std::string message;
};

inline std::string_view to_string(QueryIssue::Kind k) {
    switch (k) {
        case QueryIssue::Kind::Warning: return "warning";
        case QueryIssue::Kind::DataError: return "data";
        case QueryIssue::Kind::EndpointError: return "endpoint";
    }
    return "?";
}

struct SearchOutcome {
    Run run;                         // successful queries, topic order
    std::vector<QueryIssue> issues;  // topic order
    std::size_t failed = 0;

    bool all_failed(std::size_t num_topics) const { return num_topics > 0 && failed == num_topics; }
};

/// Retrieval context for an experiment: what every query needs besides its topic.
struct SearchContext {
    const Index& index;
    const ExperimentConfig& config;
    LlmClient* client = nullptr;  // required for llm:* expanders
    CompletionCache* cache = nullptr;
    const FewShotSet* few_shot = nullptr;
};

inline LlmExpansionConfig llm_expansion_config(const ExperimentConfig& c, const FewShotSet* few_shot) {
    LlmExpansionConfig e;
    e.template_id = c.expander.template_id;
    e.model = c.llm.model;
    auto decode = default_decode_params(e.template_id);
    decode.temperature = c.llm.temperature;
    if (c.llm.max_new_tokens) decode.max_new_tokens = *c.llm.max_new_tokens;
    e.decode = decode;
    e.prompt = c.llm.prompt;
    if (few_shot != nullptr) e.few_shot = *few_shot;
    return e;
}

/// Runs every topic with the configured expander on `config.workers`
/// threads. Per-query failures are recorded and the batch continues; output
/// order follows the topic order regardless of completion order.
inline SearchOutcome run_search(const SearchContext& ctx, const std::vector<Topic>& topics) {
    const auto& cfg = ctx.config;
    if (cfg.expander.kind == ExpanderSpec::Kind::Llm) {
        if (ctx.client == nullptr) throw ConfigError("expander " + cfg.expander.str() + " needs llm.endpoint or llm.stub");
        if (is_few_shot(cfg.expander.template_id) && ctx.few_shot == nullptr) {
            throw ConfigError("expander " + cfg.expander.str() + " needs llm.fewshot");
        }
    }
    std::unique_ptr<BoundedClient> bounded;
    if (ctx.client != nullptr) bounded = std::make_unique<BoundedClient>(*ctx.client, cfg.llm.max_in_flight);
    const auto llm_cfg = llm_expansion_config(cfg, ctx.few_shot);

    struct Slot {
        std::optional<RankedList> ranking;
        std::optional<QueryIssue> issue;
    };
    std::vector<Slot> slots(topics.size());
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    const auto run_one = [&](const Topic& topic, Slot& slot) {
        try {
            switch (cfg.expander.kind) {
                case ExpanderSpec::Kind::None:
                    slot.ranking = search(ctx.index, make_weighted_query(topic, ctx.index.analyzer()), cfg.k, cfg.bm25);
                    break;
                case ExpanderSpec::Kind::Prf: {
                    auto r = prf_expand_and_search(ctx.index, topic, cfg.bm25, cfg.prf, cfg.k);
                    if (r.first_pass_empty) {
                        slot.issue = QueryIssue{topic.query_id, QueryIssue::Kind::Warning,
                                                "first pass retrieved nothing; expansion skipped"};
                    }
                    slot.ranking = std::move(r.ranking);
                    break;
                }
                case ExpanderSpec::Kind::Llm:
                    slot.ranking =
                        llm_expand_and_search(ctx.index, topic, llm_cfg, *bounded, ctx.cache, cfg.bm25, cfg.k).ranking;
                    break;
            }
        } catch (const EndpointError& e) {
            slot.issue = QueryIssue{topic.query_id, QueryIssue::Kind::EndpointError, e.what()};
        } catch (const DataError& e) {
            slot.issue = QueryIssue{topic.query_id, QueryIssue::Kind::DataError, e.what()};
        } catch (...) {
            std::lock_guard lock(fatal_mutex);
            if (!fatal) fatal = std::current_exception();
        }
    };

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (auto i = next++; i < topics.size(); i = next++) run_one(topics[i], slots[i]);
    };
    const auto n_threads = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(1, topics.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    SearchOutcome out;
    for (auto& s : slots) {
        if (s.issue) {
            if (s.issue->kind != QueryIssue::Kind::Warning) ++out.failed;
            out.issues.push_back(std::move(*s.issue));
        }
        if (s.ranking) out.run.add(std::move(*s.ranking));
    }
    return out;
}

inline void write_issue_report(std::ostream& out, const std::vector<QueryIssue>& issues) {
    out << "query_id\tkind\tmessage\n";
    for (const auto& i : issues) {
        std::string msg = i.message;
        for (auto& c : msg) {
            if (c == '\t' || c == '\n') c = ' ';
        }
        out << i.query_id << '\t' << to_string(i.kind) << '\t' << msg << '\n';
    }
}

}  // namespace qexp
