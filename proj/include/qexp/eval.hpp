#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "qexp/bm25.hpp"
#include "qexp/error.hpp"
#include "qexp/run.hpp"
#include "qexp/stats.hpp"
#include "qexp/text.hpp"

namespace qexp {

// Per-query metrics. Relevance for recall and MRR is grade > 0; NDCG uses
// the grade as a linear gain.

inline double recall_at_k(const RankedList& list, const Qrels::Judgments& judged, std::size_t k) {
    std::size_t relevant = 0;
    for (const auto& [doc, g] : judged) relevant += g > 0 ? 1 : 0;
    if (relevant == 0) return 0.0;
    std::size_t hits = 0;
    const auto n = std::min(k, list.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto it = judged.find(list.entries[i].doc_id);
        hits += it != judged.end() && it->second > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(relevant);
}

inline double mrr_at_k(const RankedList& list, const Qrels::Judgments& judged, std::size_t k) {
    const auto n = std::min(k, list.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto it = judged.find(list.entries[i].doc_id);
        if (it != judged.end() && it->second > 0) return 1.0 / static_cast<double>(i + 1);
    }
    return 0.0;
}

inline double ideal_dcg(const Qrels::Judgments& judged, std::size_t k) {
    std::vector<int> grades;
    for (const auto& [doc, g] : judged) {
        if (g > 0) grades.push_back(g);
    }
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, grades.size()); ++i) dcg += grades[i] / std::log2(static_cast<double>(i + 2));
    return dcg;
}

/// DCG/IDCG; 0 when the ideal DCG is 0.
inline double ndcg_at_k(const RankedList& list, const Qrels::Judgments& judged, std::size_t k) {
    const double idcg = ideal_dcg(judged, k);
    if (idcg == 0.0) return 0.0;
    double dcg = 0.0;
    const auto n = std::min(k, list.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        auto it = judged.find(list.entries[i].doc_id);
        if (it != judged.end() && it->second > 0) dcg += it->second / std::log2(static_cast<double>(i + 2));
    }
    return dcg / idcg;
}

enum class MetricKind { Recall, MRR, NDCG };

struct MetricSpec {
    MetricKind kind = MetricKind::Recall;
    std::size_t k = 1000;

    std::string name() const {
        const char* base = kind == MetricKind::Recall ? "recall" : kind == MetricKind::MRR ? "mrr" : "ndcg";
        return std::string(base) + "@" + std::to_string(k);
    }

    /// "recall@1000", "mrr@10", "ndcg@10".
    static MetricSpec parse(std::string_view s) {
        const auto at = s.find('@');
        if (at == std::string_view::npos) throw ConfigError("metric '" + std::string(s) + "' lacks an @cutoff");
        MetricSpec m;
        const auto base = s.substr(0, at);
        if (base == "recall") {
            m.kind = MetricKind::Recall;
        } else if (base == "mrr") {
            m.kind = MetricKind::MRR;
        } else if (base == "ndcg") {
            m.kind = MetricKind::NDCG;
        } else {
            throw ConfigError("unknown metric '" + std::string(base) + "'");
        }
        const auto digits = s.substr(at + 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m.k);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || m.k == 0) {
            throw ConfigError("bad cutoff in metric '" + std::string(s) + "'");
        }
        return m;
    }

    double compute(const RankedList& list, const Qrels::Judgments& judged) const {
        switch (kind) {
            case MetricKind::Recall: return recall_at_k(list, judged, k);
            case MetricKind::MRR: return mrr_at_k(list, judged, k);
            case MetricKind::NDCG: return ndcg_at_k(list, judged, k);
        }
        return 0.0;
    }

    bool operator==(const MetricSpec&) const = default;
};

/// recall@1000, mrr@10, ndcg@10.
inline std::vector<MetricSpec> default_metrics() {
    return {{MetricKind::Recall, 1000}, {MetricKind::MRR, 10}, {MetricKind::NDCG, 10}};
}

struct QueryValue {
    std::string query_id;
    double value = 0.0;

    bool operator==(const QueryValue&) const = default;
};

struct MetricResult {
    std::string metric;
    std::vector<QueryValue> per_query;  // run order
    double mean = 0.0;

    bool operator==(const MetricResult&) const = default;
};

struct EvalReport {
    std::string run_tag;
    std::string qrels_id;
    std::string gain = "linear";
    std::vector<MetricResult> metrics;
    std::vector<std::string> unjudged_queries;  // in the run, no positive judgment
    std::vector<std::string> missing_queries;   // judged relevant, absent from the run

    const MetricResult* find(std::string_view metric) const {
        for (const auto& m : metrics) {
            if (m.metric == metric) return &m;
        }
        return nullptr;
    }

    bool operator==(const EvalReport&) const = default;
};

/// Scores every run query that has at least one positive judgment; other
/// queries are listed in the report instead of being scored.
inline EvalReport evaluate_run(const Run& run, const Qrels& qrels, std::span<const MetricSpec> metrics,
                               std::string run_tag = {}, std::string qrels_id = {}) {
    EvalReport report;
    report.run_tag = std::move(run_tag);
    report.qrels_id = std::move(qrels_id);
    std::vector<const RankedList*> evaluated;
    for (const auto& q : run.queries()) {
        if (qrels.num_relevant(q.query_id) > 0) {
            evaluated.push_back(&q);
        } else {
            report.unjudged_queries.push_back(q.query_id);
        }
    }
    for (const auto& [qid, judged] : qrels.all()) {
        if (qrels.num_relevant(qid) > 0 && run.find(qid) == nullptr) report.missing_queries.push_back(qid);
    }
    for (const auto& m : metrics) {
        MetricResult r{m.name(), {}, 0.0};
        double sum = 0.0;
        for (const auto* q : evaluated) {
            const double v = m.compute(*q, *qrels.judgments(q->query_id));
            r.per_query.push_back({q->query_id, v});
            sum += v;
        }
        r.mean = evaluated.empty() ? 0.0 : sum / static_cast<double>(evaluated.size());
        report.metrics.push_back(std::move(r));
    }
    return report;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["run_tag"] = r.run_tag;
    j["qrels"] = r.qrels_id;
    j["gain"] = r.gain;
    j["unjudged_queries"] = r.unjudged_queries;
    j["missing_queries"] = r.missing_queries;
    j["metrics"] = nlohmann::ordered_json::array();
    for (const auto& m : r.metrics) {
        nlohmann::ordered_json jm;
        jm["metric"] = m.metric;
        jm["mean"] = m.mean;
        jm["num_queries"] = m.per_query.size();
        jm["per_query"] = nlohmann::ordered_json::array();
        for (const auto& q : m.per_query) jm["per_query"].push_back({{"query_id", q.query_id}, {"value", q.value}});
        j["metrics"].push_back(std::move(jm));
    }
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.run_tag = j.at("run_tag").get<std::string>();
        r.qrels_id = j.at("qrels").get<std::string>();
        r.gain = j.at("gain").get<std::string>();
        r.unjudged_queries = j.at("unjudged_queries").get<std::vector<std::string>>();
        r.missing_queries = j.at("missing_queries").get<std::vector<std::string>>();
        for (const auto& jm : j.at("metrics")) {
            MetricResult m{jm.at("metric").get<std::string>(), {}, jm.at("mean").get<double>()};
            for (const auto& q : jm.at("per_query")) {
                m.per_query.push_back({q.at("query_id").get<std::string>(), q.at("value").get<double>()});
            }
            r.metrics.push_back(std::move(m));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
}

inline std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// trec_eval-like listing: `metric <TAB> query <TAB> value`, means under "all".
inline std::string render_report(const EvalReport& r, bool per_query = false) {
    std::ostringstream out;
    for (const auto& m : r.metrics) {
        if (per_query) {
            for (const auto& q : m.per_query) out << m.metric << '\t' << q.query_id << '\t' << format_metric(q.value) << '\n';
        }
        out << m.metric << "\tall\t" << format_metric(m.mean) << '\n';
    }
    out << "num_q\tall\t" << (r.metrics.empty() ? 0 : r.metrics.front().per_query.size()) << '\n';
    if (!r.unjudged_queries.empty()) out << "num_unjudged\tall\t" << r.unjudged_queries.size() << '\n';
    if (!r.missing_queries.empty()) out << "num_missing\tall\t" << r.missing_queries.size() << '\n';
    return out.str();
}

inline constexpr double kDefaultAlpha = 0.01;

struct SignificanceResult {
    std::string metric;
    double mean_baseline = 0.0;
    double mean_candidate = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t df = 0;
    std::size_t num_queries = 0;
    double alpha = kDefaultAlpha;
    bool significant = false;

    /// "▲" for a significant improvement, "▼" for a significant drop.
    std::string marker() const {
        if (!significant) return "";
        return t_statistic > 0.0 ? "▲" : "▼";
    }
};

/// Paired t-test of candidate minus baseline over the queries both runs
/// evaluate.
inline SignificanceResult compare_runs(const Run& baseline, const Run& candidate, const Qrels& qrels,
                                       const MetricSpec& metric, double alpha = kDefaultAlpha) {
    const MetricSpec one[] = {metric};
    const auto ra = evaluate_run(baseline, qrels, one);
    const auto rb = evaluate_run(candidate, qrels, one);
    std::map<std::string, double> b_values;
    for (const auto& q : rb.metrics[0].per_query) b_values[q.query_id] = q.value;
    std::vector<double> a, b;
    for (const auto& q : ra.metrics[0].per_query) {
        auto it = b_values.find(q.query_id);
        if (it == b_values.end()) continue;
        a.push_back(q.value);
        b.push_back(it->second);
    }
    if (a.empty()) throw DataError("runs share no evaluated queries");
    SignificanceResult s;
    s.metric = metric.name();
    s.num_queries = a.size();
    s.alpha = alpha;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s.mean_baseline += a[i];
        s.mean_candidate += b[i];
    }
    s.mean_baseline /= static_cast<double>(a.size());
    s.mean_candidate /= static_cast<double>(a.size());
    const auto t = paired_ttest(b, a);
    s.t_statistic = t.t;
    s.p_value = t.p;
    s.df = t.df;
    s.significant = s.p_value < alpha;
    return s;
}

}  // namespace qexp
