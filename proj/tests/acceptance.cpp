// Acceptance checks. One PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracle.hpp"
#include "qexp/config.hpp"
#include "qexp/eval.hpp"
#include "qexp/experiment.hpp"
#include "qexp/stats.hpp"
#include "support.hpp"

using namespace qexp;
using namespace testing_support;

namespace {

// Collects the first few problems of one criterion.
struct Check {
    std::vector<std::string> problems;

    void expect(bool ok, const std::string& what) {
        if (!ok && problems.size() < 5) problems.push_back(what);
        if (!ok && problems.size() == 5) problems.push_back("...");
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream s;
        s.precision(17);
        s << what << ": got " << got << ", want " << want << " +- " << tol;
        expect(std::fabs(got - want) <= tol, s.str());
    }
};

struct Criterion {
    int number;
    std::string title;
    double time_limit_s;  // 0 = untimed
    std::function<void(Check&)> body;
};

std::string run_text(const Run& run, const std::string& tag) {
    std::ostringstream out;
    write_trec_run(out, run, tag);
    return out.str();
}

const Topic kJaguar{"1045405", "who owns jaguar motors?"};

FewShotSet fixture_shots() {
    return {{{"what is a cat", "A cat is a small mammal.", {"cat", "mammal"}},
             {"what is a dog", "A dog is a loyal pet.", {"dog", "pet", "loyal"}},
             {"where is paris", "Paris is in France.", {"paris", "franc"}},
             {"who wrote hamlet", "Hamlet was written by Shakespeare.", {"hamlet", "shakespear"}}}};
}

void golden_prompts(Check& c) {
    const auto shots = fixture_shots();
    const std::vector<std::string> context = {"Doc one text.", "Doc two text.", "Doc three text."};
    for (const auto id : kAllTemplates) {
        const auto p = build_prompt(id, kJaguar, is_few_shot(id) ? &shots : nullptr,
                                    uses_prf(id) ? &context : nullptr, {});
        c.expect(p.text == read_text(test_data("prompts/" + to_string(id) + ".txt")), to_string(id) + " differs");
    }
}

void query_repetition(Check& c) {
    std::mt19937 rng(1);
    std::uniform_int_distribution<int> len(1, 20), ch(32, 126), clen(0, 60);
    for (int i = 0; i < 1000; ++i) {
        std::string q, comp;
        for (int j = len(rng); j > 0; --j) q += static_cast<char>(ch(rng));
        for (int j = clen(rng); j > 0; --j) comp += static_cast<char>(ch(rng));
        const auto e = expand_query({"id", q}, comp).text;
        std::string prefix = q;
        for (int r = 1; r < 5; ++r) prefix += " " + q;
        c.expect(e.rfind(prefix, 0) == 0, "missing five-fold prefix for [" + q + "]");
        c.expect(e.substr(prefix.size()) == (comp.empty() ? "" : " " + comp), "tail mismatch for [" + q + "]");
    }

    const auto docs = toy_docs();
    const auto idx = Index::build(docs, AnalyzerConfig::english());
    const std::vector<Topic> topics = {{"1", "cat"}, {"2", "dog mat"}, {"3", "barks sat cat"}, {"4", "mat dog cat"}};
    StubLlmClient stub;
    stub.set_default("");
    ExperimentConfig cfg;
    const auto plain = run_text(run_search({idx, cfg, &stub, nullptr, nullptr}, topics).run, "t");
    for (const char* e : {"llm:cot", "llm:q2d_zs", "llm:q2e_prf"}) {
        cfg.expander = ExpanderSpec::parse(e);
        const auto llm = run_text(run_search({idx, cfg, &stub, nullptr, nullptr}, topics).run, "t");
        c.expect(!plain.empty() && llm == plain, std::string(e) + " run differs from plain BM25");
    }
}

void bm25(Check& c) {
    const auto docs = toy_docs();
    const auto idx = Index::build(docs, AnalyzerConfig::english());
    c.near(score_document(idx, make_weighted_query({"q", "mat"}, idx.analyzer()), 0, {}), 0.70112, 1e-5,
           "score(mat, d1)");

    std::mt19937 rng(7);
    const oracle::Params op;
    int compared = 0;
    for (int round = 0; compared < 100; ++round) {
        const auto corpus = random_docs(rng);
        const auto analyzer = round % 3 == 0 ? AnalyzerConfig::plain() : AnalyzerConfig::english();
        const auto index = Index::build(corpus, analyzer);
        const auto text = random_query(rng);
        const auto tokens = analyze(text, analyzer);
        if (tokens.empty()) continue;
        ++compared;
        const auto got = search(index, make_weighted_query({"q", text}, analyzer), 1000, {});
        const auto want = oracle::rank(oracle::collect(corpus, analyzer), oracle::plain_factors(tokens, op), op, 1000);
        c.expect(got.entries.size() == want.size(), "result count differs in round " + std::to_string(round));
        for (std::size_t i = 0; i < std::min(want.size(), got.entries.size()); ++i) {
            c.expect(got.entries[i].doc_id == want[i].first, "order differs in round " + std::to_string(round));
            c.expect(std::fabs(got.entries[i].score - want[i].second) <= 1e-9 * std::max(1.0, std::fabs(want[i].second)),
                     "score differs in round " + std::to_string(round));
        }
    }
}

void index_invariants(Check& c) {
    std::mt19937 rng(11);
    TempDir tmp;
    for (int round = 0; round < 100; ++round) {
        const auto docs = random_docs(rng);
        const auto idx = Index::build(docs, round % 2 ? AnalyzerConfig::english() : AnalyzerConfig::plain());
        std::uint64_t sum_cf = 0;
        for (const auto& t : idx.terms()) {
            const auto s = idx.term_stats(t);
            c.expect(s.df <= s.cf, "df > cf for " + t);
            sum_cf += s.cf;
        }
        c.expect(sum_cf == idx.stats().num_tokens, "sum of cf != token count in round " + std::to_string(round));
        const auto dir = tmp / std::to_string(round);
        idx.save(dir);
        c.expect(Index::load(dir) == idx, "round trip differs in round " + std::to_string(round));
    }
}

void prf(Check& c) {
    c.near(bo1_weight(3, 2, 10), 8.0179, 1e-3, "Bo1 example");
    c.near(kl_weight(3, 100, 30, 10000), 0.09966, 1e-4, "KL example");

    std::mt19937 rng(21);
    const oracle::Params op;
    int compared = 0;
    for (int round = 0; round < 300; ++round) {
        const auto model = static_cast<PrfModel>(round % 3);
        const auto omodel = model == PrfModel::Bo1 ? oracle::Model::Bo1
                            : model == PrfModel::Bo2 ? oracle::Model::Bo2
                                                     : oracle::Model::KL;
        const auto docs = random_docs(rng);
        const auto idx = Index::build(docs, AnalyzerConfig::english());
        const auto text = random_query(rng);
        const auto tokens = analyze(text, idx.analyzer());
        if (tokens.empty()) continue;
        PrfConfig cfg;
        cfg.model = model;
        cfg.fb_docs = 1 + round % 5;
        cfg.fb_terms = 1 + round % 12;
        const auto got = prf_expand_and_search(idx, {"q", text}, {}, cfg, 1000);
        const auto want = oracle::prf(oracle::collect(docs, idx.analyzer()), tokens, op, omodel, cfg.fb_docs,
                                      cfg.fb_terms, cfg.beta, 1000);
        if (want.first_pass.empty()) continue;
        ++compared;
        const auto where = " in round " + std::to_string(round);
        c.expect(got.expansion.size() == want.expansion.size(), "term count differs" + where);
        for (std::size_t i = 0; i < std::min(got.expansion.size(), want.expansion.size()); ++i) {
            c.expect(got.expansion[i].term == want.expansion[i].first, "term selection differs" + where);
            c.expect(std::fabs(got.expansion[i].weight - want.expansion[i].second) <=
                         1e-9 * std::fabs(want.expansion[i].second),
                     "weight differs" + where);
        }
        c.expect(got.ranking.entries.size() == want.ranking.size(), "final ranking size differs" + where);
        for (std::size_t i = 0; i < std::min(got.ranking.entries.size(), want.ranking.size()); ++i) {
            c.expect(got.ranking.entries[i].doc_id == want.ranking[i].first, "final ranking differs" + where);
        }
    }
    c.expect(compared >= 100, "too few comparable rounds: " + std::to_string(compared));
}

void metrics(Check& c) {
    auto list = [](const std::vector<std::string>& docs) {
        RankedList l{"q", {}};
        double s = static_cast<double>(docs.size());
        for (const auto& d : docs) l.entries.push_back({d, s--});
        return l;
    };
    c.near(ndcg_at_k(list({"a", "b", "c"}), {{"b", 1}}, 10), 0.63093, 1e-5, "ndcg, one relevant at rank 2");

    std::mt19937 rng(8);
    std::uniform_int_distribution<int> n_docs(0, 40), grade(0, 3), pick(0, 59);
    for (int round = 0; round < 1000; ++round) {
        std::vector<std::string> ranked;
        std::set<std::string> used;
        for (int i = n_docs(rng); i > 0; --i) {
            auto d = "d" + std::to_string(pick(rng));
            if (used.insert(d).second) ranked.push_back(d);
        }
        Qrels::Judgments j;
        oracle::Grades g;
        for (int i = 0; i < 15; ++i) {
            const auto d = "d" + std::to_string(pick(rng));
            const int gr = grade(rng);
            if (j.emplace(d, gr).second) g[d] = gr;
        }
        const auto l = list(ranked);
        for (const std::size_t k : {1, 3, 10, 1000}) {
            const auto where = " k=" + std::to_string(k) + " round " + std::to_string(round);
            c.near(recall_at_k(l, j, k), oracle::recall(ranked, g, k), 1e-9, "recall" + where);
            c.near(mrr_at_k(l, j, k), oracle::mrr(ranked, g, k), 1e-9, "mrr" + where);
            c.near(ndcg_at_k(l, j, k), oracle::ndcg(ranked, g, k), 1e-9, "ndcg" + where);
        }
    }
}

void ttest(Check& c) {
    const std::vector<double> d = {1, 2, 3, 4, 5}, zeros(5, 0.0);
    const auto r = paired_ttest(d, zeros);
    c.near(r.t, 4.2426, 1e-3, "t");
    c.near(r.p, 0.0132, 1e-3, "p");
    const auto back = paired_ttest(zeros, d);
    c.expect(back.t == -r.t && back.p == r.p, "swapping runs must negate t and keep p");
    const auto self = paired_ttest(d, d);
    c.expect(self.t == 0.0 && self.p == 1.0, "self comparison must give t=0, p=1");

    Run run;
    Qrels qrels;
    for (int i = 0; i < 6; ++i) {
        const auto q = std::to_string(i);
        qrels.add(q, "rel", 1);
        run.add({q, {{"x", 2.0}, {"rel", 1.0}}});
    }
    const auto same = compare_runs(run, run, qrels, {MetricKind::MRR, 10});
    c.expect(!same.significant && same.marker().empty(), "run compared with itself is marked");
}

void cot_filter(Check& c) {
    const std::string ul2 =
        "Jaguar Land Rover is a British multinational car manufacturer, founded by William Lyons in 1931. Its "
        "headquarters are in Whitley, Coventry, United Kingdom and is a constituent of the FTSE 250 Index. The company "
        "is a wholly owned subsidiary of Tata Motors of India. So the final answer is Tata Motors.";
    const std::string kept = ul2.substr(0, ul2.find(" So the final answer is"));
    c.expect(filter_cot(ul2) == kept, "fixture filtered to [" + filter_cot(ul2) + "]");

    std::mt19937 rng(99);
    const std::vector<std::string> pieces = {"a", "b", " ", "  ", ".", "!", "?", "\n", "\t", "word", "1.5",
                                             "The final answer:", "So the final answer is", "é", "x."};
    std::uniform_int_distribution<std::size_t> n(0, 30), pick(0, pieces.size() - 1);
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        for (auto k = n(rng); k > 0; --k) s += pieces[pick(rng)];
        const auto once = filter_cot(s);
        c.expect(filter_cot(once) == once, "not idempotent on [" + s + "]");
    }
}

// The bundled mini corpus, indexed in memory.
struct MiniMarco {
    ExperimentConfig config;
    Index index;
    std::vector<Topic> topics;
    Qrels qrels;
    FewShotSet few_shot;

    static MiniMarco load() {
        const auto path = repo_data("minimarco/config.json");
        auto cfg = parse_config(read_config_file(path.string()), path.parent_path());
        const auto docs = read_corpus(*cfg.corpus, cfg.corpus_format);
        auto index = Index::build(docs, cfg.analyzer, 2);
        return {cfg, std::move(index), read_topics(*cfg.topics), read_qrels(*cfg.qrels),
                read_fewshot(*cfg.llm.fewshot)};
    }
};

std::optional<std::size_t> rank_of(const Run& run, const std::string& qid, const std::string& doc) {
    for (const auto& l : run.queries()) {
        if (l.query_id != qid) continue;
        for (std::size_t i = 0; i < l.entries.size(); ++i) {
            if (l.entries[i].doc_id == doc) return i + 1;
        }
    }
    return std::nullopt;
}

void end_to_end(Check& c) {
    auto mm = MiniMarco::load();
    StubLlmClient stub(*mm.config.llm.stub);
    const std::vector<Topic> jaguar = {mm.topics.front()};
    c.expect(jaguar[0].query_id == "1045405", "first topic is not the jaguar query");
    std::string relevant;
    for (const auto& [doc, grade] : *mm.qrels.judgments(jaguar[0].query_id)) {
        if (grade > 0) relevant = doc;
    }
    auto cfg = mm.config;
    const auto plain = run_search({mm.index, cfg, &stub, nullptr, &mm.few_shot}, jaguar);
    cfg.expander = ExpanderSpec::parse("llm:cot");
    const auto cot = run_search({mm.index, cfg, &stub, nullptr, &mm.few_shot}, jaguar);
    const auto r_plain = rank_of(plain.run, jaguar[0].query_id, relevant);
    const auto r_cot = rank_of(cot.run, jaguar[0].query_id, relevant);
    std::cout << "  relevant " << relevant << ": bm25 rank " << (r_plain ? std::to_string(*r_plain) : "-")
              << ", cot rank " << (r_cot ? std::to_string(*r_cot) : "-") << '\n';
    c.expect(r_cot && (!r_plain || *r_cot < *r_plain), "CoT expansion did not improve the relevant passage");
}

void warm_cache(Check& c) {
    auto mm = MiniMarco::load();
    TempDir tmp;
    StubLlmClient stub(*mm.config.llm.stub);
    stub.set_default("rainforest cat coventry engine");  // the fixture only covers the jaguar query
    const auto metrics = default_metrics();
    for (const char* e : {"none", "bo1", "kl", "llm:cot", "llm:cot_prf", "llm:q2d", "llm:q2e_prf"}) {
        auto cfg = mm.config;
        cfg.expander = ExpanderSpec::parse(e);
        if (cfg.expander.kind == ExpanderSpec::Kind::Prf) cfg.prf.model = cfg.expander.prf_model;
        auto outputs = [&](LlmClient& client) {
            CompletionCache cache(tmp / "cache");
            const auto out = run_search({mm.index, cfg, &client, &cache, &mm.few_shot}, mm.topics);
            const auto report = evaluate_run(out.run, mm.qrels, metrics, cfg.run_tag, *cfg.qrels);
            return run_text(out.run, cfg.run_tag) + to_json(report).dump(2) + render_report(report, true) +
                   cfg.to_json().dump(2);
        };
        const auto cold = outputs(stub);
        StubLlmClient dead;
        const auto warm = outputs(dead);
        c.expect(dead.calls() == 0, std::string(e) + ": warm run reached the client");
        c.expect(cold == warm, std::string(e) + ": warm rerun is not byte-identical");
    }
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "prompt templates render byte-identically to golden fixtures", 1.0, golden_prompts},
        {2, "five-fold query repetition; empty completion reproduces plain BM25 run", 10.0, query_repetition},
        {3, "BM25 hand-checked score and brute-force ordering oracle", 0, bm25},
        {4, "index statistics invariants and save/load round trip", 0, index_invariants},
        {5, "PRF worked examples and brute-force expansion oracle", 0, prf},
        {6, "recall/MRR/NDCG oracle and NDCG rank-2 example", 0, metrics},
        {7, "paired t-test reference values, symmetry, self comparison", 0, ttest},
        {8, "chain-of-thought filter fixture and idempotence", 0, cot_filter},
        {9, "mini corpus: CoT expansion ranks the relevant passage higher", 0, end_to_end},
        {10, "warm-cache reruns give byte-identical runs and reports", 0, warm_cache},
    };
    const auto suite_start = std::chrono::steady_clock::now();
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.problems.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cr.time_limit_s > 0 && secs > cr.time_limit_s) {
            check.problems.push_back("took " + std::to_string(secs) + "s, limit " + std::to_string(cr.time_limit_s) + "s");
        }
        const bool ok = check.problems.empty();
        failed += !ok;
        std::printf("%s %d: %s (%.3fs)\n", ok ? "PASS" : "FAIL", cr.number, cr.title.c_str(), secs);
        for (const auto& p : check.problems) std::printf("  %s\n", p.c_str());
        std::fflush(stdout);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
    std::printf("total %.3fs, %d of %zu failed\n", total, failed, criteria.size());
    if (total > 60.0) {
        std::printf("FAIL: acceptance suite exceeded 60s\n");
        ++failed;
    }
    return failed == 0 ? 0 : 1;
}
