#include <gtest/gtest.h>

#include <sstream>

#include "oracle.hpp"
#include "qexp/bm25.hpp"
#include "qexp/run.hpp"
#include "support.hpp"

using namespace qexp;
using namespace testing_support;

namespace {

Index toy_index() {
    const auto docs = toy_docs();
    return Index::build(docs, AnalyzerConfig::english());
}

WeightedQuery q(const Index& idx, const std::string& text, const std::string& id = "q") {
    return make_weighted_query(Topic{id, text}, idx.analyzer());
}

}  // namespace

TEST(Bm25, HandCheckedToyScore) {
    const auto idx = toy_index();
    const Bm25Params p;
    // idf = log2(2.5/1.5), tf part = 2.2 / (1.2 * (0.25 + 0.75 * 3 / (8/3)) + 1), qtf part = 1
    EXPECT_NEAR(score_document(idx, q(idx, "mat"), 0, p), 0.70112, 1e-5);
    EXPECT_DOUBLE_EQ(score_document(idx, q(idx, "mat"), 1, p), 0.0);
}

TEST(Bm25, Components) {
    EXPECT_DOUBLE_EQ(qtf_saturation(5, 8), 45.0 / 13.0);
    EXPECT_DOUBLE_EQ(qtf_saturation(1, 8), 1.0);
    EXPECT_NEAR(bm25_idf(3, 1), std::log2(2.5 / 1.5), 1e-15);
    EXPECT_LT(bm25_idf(3, 3), 0.0);  // in every document: negative, kept
    const Bm25Params p;
    EXPECT_DOUBLE_EQ(bm25_tf(1, 10, 10, p), 1.0);  // average length, tf 1
    EXPECT_LT(bm25_tf(3, 10, 10, p), p.k1 + 1.0);
}

TEST(Bm25, ParamsValidate) {
    Bm25Params p;
    EXPECT_NO_THROW(p.validate());
    p.b = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.k1 = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.k3 = -0.5;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Bm25, SearchOrdersAndFilters) {
    const auto idx = toy_index();
    const auto r = search(idx, q(idx, "mat barks"), 10, {});
    ASSERT_EQ(r.entries.size(), 2u);
    EXPECT_EQ(r.entries[0].doc_id, "d3");  // shorter document
    EXPECT_EQ(r.entries[1].doc_id, "d1");
    EXPECT_TRUE(search(idx, q(idx, "unicorn"), 10, {}).entries.empty());
    // "cat" is in two of three documents, so its idf is negative and nothing scores above zero.
    EXPECT_TRUE(search(idx, q(idx, "cat"), 10, {}).entries.empty());
    EXPECT_EQ(search(idx, q(idx, "mat barks"), 1, {}).entries.size(), 1u);
    EXPECT_THROW(search(idx, q(idx, "mat"), 0, {}), ConfigError);
}

TEST(Bm25, TiesBreakByDocId) {
    const std::vector<Document> docs = {{"z", "river", {}}, {"a", "river", {}}, {"m", "river", {}}, {"x", "stone", {}},
                                        {"y", "stone", {}}, {"w", "stone", {}}, {"v", "stone", {}}};
    const auto idx = Index::build(docs, AnalyzerConfig::english());
    const auto r = search(idx, q(idx, "river"), 10, {});
    ASSERT_EQ(r.entries.size(), 3u);
    EXPECT_EQ(r.entries[0].doc_id, "a");
    EXPECT_EQ(r.entries[1].doc_id, "m");
    EXPECT_EQ(r.entries[2].doc_id, "z");
}

TEST(Bm25, EmptyAnalyzedQueryIsAnError) {
    const auto idx = toy_index();
    EXPECT_THROW(q(idx, "the of and"), DataError);
    EXPECT_THROW(q(idx, "?!"), DataError);
}

TEST(Bm25, RepeatingTheWholeQueryChangesNothing) {
    std::mt19937 rng(21);
    for (int round = 0; round < 50; ++round) {
        const auto docs = random_docs(rng);
        const auto idx = Index::build(docs, AnalyzerConfig::english());
        std::string text = random_query(rng);
        if (analyze(text, idx.analyzer()).empty()) continue;
        std::string five = text;
        for (int i = 0; i < 4; ++i) five += " " + text;
        EXPECT_EQ(search(idx, q(idx, text), 1000, {}), search(idx, q(idx, five), 1000, {}));
    }
}

TEST(Bm25, ExplicitWeightsOverrideQtf) {
    const auto idx = toy_index();
    auto wq = q(idx, "cat dog");
    wq.terms["dog"].weight = 0.0;
    const auto only_cat = search(idx, q(idx, "cat"), 10, {});
    const auto r = search(idx, wq, 10, {});
    ASSERT_EQ(r.entries.size(), only_cat.entries.size());
    for (std::size_t i = 0; i < r.entries.size(); ++i) EXPECT_EQ(r.entries[i].doc_id, only_cat.entries[i].doc_id);
}

TEST(Bm25, SearchMatchesBruteForceOracle) {
    std::mt19937 rng(7);
    const oracle::Params op;
    for (int round = 0; round < 100; ++round) {
        const auto docs = random_docs(rng);
        const auto analyzer = round % 3 == 0 ? AnalyzerConfig::plain() : AnalyzerConfig::english();
        const auto idx = Index::build(docs, analyzer);
        const auto coll = oracle::collect(docs, analyzer);
        const auto text = random_query(rng);
        const auto tokens = analyze(text, analyzer);
        if (tokens.empty()) continue;
        const auto got = search(idx, q(idx, text), 1000, {});
        const auto want = oracle::rank(coll, oracle::plain_factors(tokens, op), op, 1000);
        ASSERT_EQ(got.entries.size(), want.size()) << "round " << round;
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_EQ(got.entries[i].doc_id, want[i].first) << "round " << round << " rank " << i;
            EXPECT_NEAR(got.entries[i].score, want[i].second, 1e-9 * std::max(1.0, std::fabs(want[i].second)));
        }
        // score_document agrees bit for bit with the accumulated score.
        for (const auto& e : got.entries) {
            EXPECT_EQ(score_document(idx, q(idx, text), *idx.ordinal(e.doc_id), {}), e.score);
        }
    }
}

TEST(RunFile, WriteReadRoundTrip) {
    qexp::Run run;
    run.add({"q1", {{"d2", 1.5}, {"d1", 0.25}}});
    run.add({"q0", {{"d9", 3.0}}});
    std::ostringstream out;
    write_trec_run(out, run, "tag");
    EXPECT_EQ(out.str(), "q1 Q0 d2 1 1.5 tag\nq1 Q0 d1 2 0.25 tag\nq0 Q0 d9 1 3 tag\n");

    TempDir tmp;
    write_text(tmp / "r.run", out.str());
    const auto back = read_trec_run((tmp / "r.run").string());
    EXPECT_EQ(back, run);
}

TEST(RunFile, RejectsMalformedLines) {
    TempDir tmp;
    write_text(tmp / "a.run", "q1 Q0 d1 1\n");
    EXPECT_THROW(read_trec_run((tmp / "a.run").string()), DataError);
    write_text(tmp / "b.run", "q1 Q0 d1 1 abc tag\n");
    EXPECT_THROW(read_trec_run((tmp / "b.run").string()), DataError);
    write_text(tmp / "c.run", "q1 Q0 d1 1 1.0 tag\nq1 Q0 d1 2 0.5 tag\n");
    EXPECT_THROW(read_trec_run((tmp / "c.run").string()), DataError);
}

TEST(RunFile, DuplicateQueriesRejected) {
    qexp::Run run;
    run.add({"q", {}});
    EXPECT_THROW(run.add({"q", {}}), DataError);
    EXPECT_THROW(run.add({"r", {{"d", 1}, {"d", 0.5}}}), DataError);
}
