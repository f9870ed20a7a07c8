#include <gtest/gtest.h>

#include "qexp/config.hpp"
#include "support.hpp"

using namespace qexp;
using namespace testing_support;

namespace {

std::string config_error(const std::string& json, const std::filesystem::path& base = "/tmp") {
    try {
        parse_config(nlohmann::json::parse(json), base);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "<accepted>";
}

}  // namespace

TEST(Config, DefaultsFromEmptyObject) {
    const auto c = parse_config(nlohmann::json::object(), "/base");
    EXPECT_EQ(c.expander.kind, ExpanderSpec::Kind::None);
    EXPECT_EQ(c.k, 1000u);
    EXPECT_EQ(c.analyzer.fingerprint(), AnalyzerConfig::english().fingerprint());
    EXPECT_EQ(c.bm25.k1, 1.2);
    EXPECT_EQ(c.prf.fb_terms, 10u);
    EXPECT_EQ(c.llm.model, "flan-ul2");
}

TEST(Config, ResolvesPathsAgainstBase) {
    const auto c = parse_config(nlohmann::json::parse(R"({"corpus": {"path": "data/c.tsv"}, "topics": "/abs/t.tsv",
                                                         "llm": {"cache_dir": "../cache"}})"),
                                "/base/exp");
    EXPECT_EQ(*c.corpus, "/base/exp/data/c.tsv");
    EXPECT_EQ(*c.topics, "/abs/t.tsv");
    EXPECT_EQ(*c.llm.cache_dir, "/base/cache");
}

TEST(Config, ExpanderSpecs) {
    EXPECT_EQ(ExpanderSpec::parse("none").kind, ExpanderSpec::Kind::None);
    EXPECT_EQ(ExpanderSpec::parse("kl").prf_model, PrfModel::KL);
    const auto e = ExpanderSpec::parse("llm:cot_prf");
    EXPECT_EQ(e.kind, ExpanderSpec::Kind::Llm);
    EXPECT_EQ(e.template_id, TemplateId::CoT_PRF);
    EXPECT_EQ(e.str(), "llm:cot_prf");
    EXPECT_THROW(ExpanderSpec::parse("llm:"), ConfigError);
    EXPECT_THROW(ExpanderSpec::parse("rm3"), ConfigError);
    const auto c = parse_config(nlohmann::json::parse(R"({"expander": "bo2"})"), "/");
    EXPECT_EQ(c.prf.model, PrfModel::Bo2);
}

TEST(Config, ErrorsNameTheField) {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {R"({"bm25": {"k1": "high"}})", "bm25.k1"},
        {R"({"bm25": {"b": 2}})", "bm25"},
        {R"({"bm25": {"k4": 1}})", "bm25.k4"},
        {R"({"expander": "rm3"})", "expander"},
        {R"({"expander": 3})", "expander"},
        {R"({"prf": {"fb_docs": 0}})", "prf"},
        {R"({"prf": {"fb_terms": -1}})", "prf.fb_terms"},
        {R"({"corpus": {"format": "xml"}})", "corpus.format"},
        {R"({"corpus": {"path": ""}})", "corpus.path"},
        {R"({"corpus": "file.tsv"})", "corpus"},
        {R"({"analyzer": {"stemmer": "snowball"}})", "analyzer.stemmer"},
        {R"({"analyzer": {"stopwords": "klingon"}})", "analyzer.stopwords"},
        {R"({"analyzer": {"lowercase": "yes"}})", "analyzer.lowercase"},
        {R"({"llm": {"temperature": -1}})", "llm.temperature"},
        {R"({"llm": {"max_new_tokens": 0}})", "llm.max_new_tokens"},
        {R"({"llm": {"max_in_flight": 0}})", "llm.max_in_flight"},
        {R"({"llm": {"max_attempts": 0}})", "llm.max_attempts"},
        {R"({"llm": {"endpoint": "http://x", "stub": "s.jsonl"}})", "llm.endpoint"},
        {R"({"llm": {"modle": "x"}})", "llm.modle"},
        {R"({"run_tag": "has space"})", "run_tag"},
        {R"({"k": 0})", "'k'"},
        {R"({"workers": 0})", "workers"},
        {R"({"unknown": 1})", "unknown"},
    };
    for (const auto& [json, field] : cases) {
        const auto msg = config_error(json);
        EXPECT_NE(msg.find(field), std::string::npos) << json << " -> " << msg;
    }
}

TEST(Config, StopwordListFromFile) {
    TempDir tmp;
    write_text(tmp / "stop.txt", "# comment\nfoo\nbar\n");
    const auto c = parse_config(nlohmann::json::parse(R"({"analyzer": {"stopwords": "stop.txt"}})"), tmp.path());
    EXPECT_EQ(c.analyzer.stopwords, (std::set<std::string>{"bar", "foo"}));
    const auto none = parse_config(nlohmann::json::parse(R"({"analyzer": {"stopwords": "none"}})"), tmp.path());
    EXPECT_TRUE(none.analyzer.stopwords.empty());
}

TEST(Config, RequirePath) {
    std::optional<std::string> missing;
    EXPECT_THROW(require_path(missing, "topics"), ConfigError);
    std::optional<std::string> nowhere = "/definitely/not/here";
    try {
        require_path(nowhere, "topics");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("/definitely/not/here"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("topics"), std::string::npos);
    }
}

TEST(Config, BundledMiniCorpusConfigParses) {
    const auto path = repo_data("minimarco/config.json");
    const auto c = parse_config(read_config_file(path.string()), path.parent_path());
    EXPECT_TRUE(std::filesystem::exists(*c.corpus));
    EXPECT_TRUE(std::filesystem::exists(*c.topics));
    EXPECT_TRUE(std::filesystem::exists(*c.llm.stub));
    EXPECT_TRUE(std::filesystem::exists(*c.llm.fewshot));
}

TEST(Config, EchoedConfigIsStable) {
    const auto c = parse_config(nlohmann::json::parse(R"({"expander": "llm:q2e", "run_tag": "x"})"), "/b");
    const auto j = c.to_json();
    EXPECT_EQ(j.at("expander"), "llm:q2e");
    EXPECT_EQ(j.at("run_tag"), "x");
    EXPECT_EQ(j.dump(), parse_config(nlohmann::json::parse(R"({"expander": "llm:q2e", "run_tag": "x"})"), "/b")
                            .to_json()
                            .dump());
}
