// qexp: index, search, expand, eval, compare, fewshot.
//
// Exit codes: 0 ok, 1 usage/config, 2 data, 3 endpoint.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qexp/config.hpp"
#include "qexp/eval.hpp"
#include "qexp/experiment.hpp"
#include "qexp/index.hpp"
#include "qexp/llm.hpp"
#include "qexp/llm_expansion.hpp"
#include "qexp/llm_http.hpp"

namespace fs = std::filesystem;
using namespace qexp;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kEndpoint = 3 };

std::string cli_path(const std::string& s) { return fs::absolute(s).lexically_normal().string(); }

// Flags shared by index/search/expand. Empty means "keep the config value".
struct Overrides {
    std::string config;
    std::string corpus, format, index_dir, topics, qrels, output_dir, run_tag, expander;
    std::string stub, endpoint, model, cache_dir, fewshot;
    std::size_t k = 0, workers = 0;
};

void add_config_flag(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
}

void add_index_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--index-dir", o.index_dir, "index directory");
}

void add_search_flags(CLI::App* cmd, Overrides& o) {
    add_index_flags(cmd, o);
    cmd->add_option("--topics", o.topics, "topics tsv");
    cmd->add_option("--expander", o.expander, "none | bo1 | bo2 | kl | llm:<template>");
    cmd->add_option("--stub", o.stub, "stub completions jsonl");
    cmd->add_option("--endpoint", o.endpoint, "generation endpoint URL");
    cmd->add_option("--model", o.model, "model name sent to the endpoint");
    cmd->add_option("--cache-dir", o.cache_dir, "completion cache directory");
    cmd->add_option("--fewshot", o.fewshot, "few-shot examples jsonl");
    cmd->add_option("-k,--depth", o.k, "results per query");
}

ExperimentConfig load_config(const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    fs::path base = fs::current_path();
    if (!o.config.empty()) {
        j = read_config_file(o.config);
        base = fs::absolute(o.config).parent_path();
    }
    auto c = parse_config(j, base);
    if (!o.corpus.empty()) c.corpus = cli_path(o.corpus);
    if (!o.format.empty()) c.corpus_format = parse_corpus_format(o.format);
    if (!o.index_dir.empty()) c.index_dir = cli_path(o.index_dir);
    if (!o.topics.empty()) c.topics = cli_path(o.topics);
    if (!o.qrels.empty()) c.qrels = cli_path(o.qrels);
    if (!o.output_dir.empty()) c.output_dir = cli_path(o.output_dir);
    if (!o.run_tag.empty()) c.run_tag = o.run_tag;
    if (!o.expander.empty()) {
        try {
            c.expander = ExpanderSpec::parse(o.expander);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--expander: ") + e.what());
        }
        if (c.expander.kind == ExpanderSpec::Kind::Prf) c.prf.model = c.expander.prf_model;
    }
    if (!o.stub.empty()) {
        c.llm.stub = cli_path(o.stub);
        c.llm.endpoint.reset();
    }
    if (!o.endpoint.empty()) {
        c.llm.endpoint = o.endpoint;
        c.llm.stub.reset();
    }
    if (!o.model.empty()) c.llm.model = o.model;
    if (!o.cache_dir.empty()) c.llm.cache_dir = cli_path(o.cache_dir);
    if (!o.fewshot.empty()) c.llm.fewshot = cli_path(o.fewshot);
    if (o.k > 0) c.k = o.k;
    if (o.workers > 0) c.workers = o.workers;
    return c;
}

Index load_index(const ExperimentConfig& c) {
    const auto& dir = require_path(c.index_dir, "index_dir");
    return Index::load(dir, &c.analyzer);
}

// LLM plumbing for one command; owns whatever the config asks for.
struct LlmSetup {
    std::unique_ptr<LlmClient> client;
    std::unique_ptr<CompletionCache> cache;
    std::optional<FewShotSet> few_shot;

    explicit LlmSetup(const ExperimentConfig& c) {
        if (c.expander.kind != ExpanderSpec::Kind::Llm) return;
        if (c.llm.stub) {
            client = std::make_unique<StubLlmClient>(require_path(c.llm.stub, "llm.stub"));
        } else if (c.llm.endpoint) {
            HttpClientOptions opt;
            opt.url = *c.llm.endpoint;
            opt.max_attempts = c.llm.max_attempts;
            opt.initial_backoff = std::chrono::milliseconds(c.llm.initial_backoff_ms);
            client = std::make_unique<HttpLlmClient>(opt);
        } else {
            throw ConfigError("expander " + c.expander.str() + " needs llm.endpoint or llm.stub");
        }
        if (c.llm.cache_dir) cache = std::make_unique<CompletionCache>(*c.llm.cache_dir);
        if (is_few_shot(c.expander.template_id)) few_shot = read_fewshot(require_path(c.llm.fewshot, "llm.fewshot"));
    }
};

void refuse_overwrite(const fs::path& p, bool force) {
    if (!force && fs::exists(p)) throw ConfigError(p.string() + " already exists (use --force to overwrite)");
}

void write_file(const fs::path& p, const std::string& contents) {
    const auto tmp = p.string() + ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << contents;
        if (!out) throw DataError("cannot write " + tmp);
    }
    fs::rename(tmp, p);
}

std::vector<MetricSpec> parse_metrics(const std::vector<std::string>& names) {
    if (names.empty()) return default_metrics();
    std::vector<MetricSpec> out;
    for (const auto& n : names) out.push_back(MetricSpec::parse(n));
    return out;
}

std::string qrels_label(const std::string& path) { return fs::path(path).filename().string(); }

// ---- index ----

struct IndexArgs {
    Overrides o;
    bool force = false;
    unsigned threads = 1;
};

int cmd_index(const IndexArgs& a) {
    const auto c = load_config(a.o);
    const auto& corpus = require_path(c.corpus, "corpus.path", false);
    if (!fs::exists(corpus)) throw DataError("corpus not found: " + corpus);
    const auto& dir = require_path(c.index_dir, "index_dir", false);
    if (!a.force && fs::exists(fs::path(dir) / "manifest.txt")) {
        throw ConfigError("index already exists in " + dir + " (use --force to rebuild)");
    }
    const auto docs = read_corpus(corpus, c.corpus_format);
    const auto idx = Index::build(docs, c.analyzer, a.threads);
    idx.save(dir);
    const auto& s = idx.stats();
    std::cout << "index " << dir << '\n'
              << "N=" << s.num_docs << " token_c=" << s.num_tokens << " terms=" << s.num_terms << '\n';
    return kOk;
}

// ---- search ----

struct SearchArgs {
    Overrides o;
    bool force = false;
};

int cmd_search(const SearchArgs& a) {
    const auto c = load_config(a.o);
    const auto& out_dir = require_path(c.output_dir, "output_dir", false);
    const auto run_path = fs::path(out_dir) / (c.run_tag + ".run");
    const auto fail_path = fs::path(out_dir) / (c.run_tag + ".failures.tsv");
    const auto cfg_path = fs::path(out_dir) / (c.run_tag + ".config.json");
    const auto eval_path = fs::path(out_dir) / (c.run_tag + ".eval.json");
    for (const auto& p : {run_path, fail_path, cfg_path, eval_path}) refuse_overwrite(p, a.force);

    const auto topics = read_topics(require_path(c.topics, "topics"));
    std::optional<Qrels> qrels;
    if (c.qrels) qrels = read_qrels(require_path(c.qrels, "qrels"));
    const auto index = load_index(c);
    LlmSetup llm(c);

    SearchContext ctx{index, c, llm.client.get(), llm.cache.get(), llm.few_shot ? &*llm.few_shot : nullptr};
    const auto outcome = run_search(ctx, topics);

    fs::create_directories(out_dir);
    std::ostringstream run_text;
    write_trec_run(run_text, outcome.run, c.run_tag);
    write_file(run_path, run_text.str());
    std::ostringstream issues;
    write_issue_report(issues, outcome.issues);
    write_file(fail_path, issues.str());
    write_file(cfg_path, c.to_json().dump(2) + "\n");

    for (const auto& i : outcome.issues) std::cerr << i.query_id << ": " << to_string(i.kind) << ": " << i.message << '\n';
    std::cout << "wrote " << run_path.string() << " (" << outcome.run.queries().size() << "/" << topics.size()
              << " queries)\n";

    if (qrels) {
        const auto metrics = default_metrics();
        const auto report = evaluate_run(outcome.run, *qrels, metrics, c.run_tag, qrels_label(*c.qrels));
        write_file(eval_path, to_json(report).dump(2) + "\n");
        std::cout << render_report(report);
    }

    if (outcome.all_failed(topics.size())) {
        std::cerr << "error: every query failed\n";
        for (const auto& i : outcome.issues) {
            if (i.kind == QueryIssue::Kind::EndpointError) return kEndpoint;
        }
        return kData;
    }
    return kOk;
}

// ---- expand ----

struct ExpandArgs {
    Overrides o;
    std::string query_id;
};

int cmd_expand(const ExpandArgs& a) {
    const auto c = load_config(a.o);
    if (c.expander.kind != ExpanderSpec::Kind::Llm) throw ConfigError("expand needs an llm:<template> expander");
    const auto topics = read_topics(require_path(c.topics, "topics"));
    const Topic* topic = nullptr;
    for (const auto& t : topics) {
        if (t.query_id == a.query_id) topic = &t;
    }
    if (topic == nullptr) throw DataError("query '" + a.query_id + "' not in " + *c.topics);
    const auto index = load_index(c);
    LlmSetup llm(c);
    const auto cfg = llm_expansion_config(c, llm.few_shot ? &*llm.few_shot : nullptr);
    const auto t = expand_with_llm(index, *topic, cfg, *llm.client, llm.cache.get(), c.bm25);

    std::cout << "== prompt (" << display_name(cfg.template_id) << ") ==\n"
              << t.prompt.text << "\n== completion" << (t.response.from_cache ? " (cached)" : "") << " ==\n"
              << t.response.text << '\n';
    if (is_cot(cfg.template_id)) std::cout << "== filtered ==\n" << t.processed << '\n';
    std::cout << "== expanded query ==\n" << t.expanded.text << '\n';
    return kOk;
}

// ---- eval ----

struct EvalArgs {
    std::string config, run, qrels, output = "text", tag;
    std::vector<std::string> metrics;
    bool per_query = false;
};

std::string resolve_qrels(const std::string& flag, const std::string& config) {
    if (!flag.empty()) return cli_path(flag);
    if (!config.empty()) {
        const auto c = parse_config(read_config_file(config), fs::absolute(config).parent_path());
        return require_path(c.qrels, "qrels");
    }
    throw ConfigError("--qrels is required");
}

int cmd_eval(const EvalArgs& a) {
    const auto qrels_path = resolve_qrels(a.qrels, a.config);
    const auto metrics = parse_metrics(a.metrics);
    const auto run = read_trec_run(cli_path(a.run));
    const auto qrels = read_qrels(qrels_path);
    const auto tag = a.tag.empty() ? fs::path(a.run).stem().string() : a.tag;
    const auto report = evaluate_run(run, qrels, metrics, tag, qrels_label(qrels_path));
    if (a.output == "json") {
        std::cout << to_json(report).dump(2) << '\n';
    } else {
        std::cout << render_report(report, a.per_query);
    }
    return kOk;
}

// ---- compare ----

struct CompareArgs {
    std::string config, baseline, qrels, output = "text";
    std::vector<std::string> runs, metrics;
    double alpha = kDefaultAlpha;
};

int cmd_compare(const CompareArgs& a) {
    const auto qrels_path = resolve_qrels(a.qrels, a.config);
    const auto metrics = parse_metrics(a.metrics);
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw ConfigError("--alpha must be in (0, 1)");
    const auto qrels = read_qrels(qrels_path);
    const auto base = read_trec_run(cli_path(a.baseline));
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::ostringstream text;
    text << "run\tmetric\tbaseline\tcandidate\tt\tp\tn\n";
    for (const auto& path : a.runs) {
        const auto cand = read_trec_run(cli_path(path));
        const auto name = fs::path(path).stem().string();
        for (const auto& m : metrics) {
            const auto s = compare_runs(base, cand, qrels, m, a.alpha);
            char t_buf[32], p_buf[32];
            std::snprintf(t_buf, sizeof t_buf, "%.4f", s.t_statistic);
            std::snprintf(p_buf, sizeof p_buf, "%.4g", s.p_value);
            text << name << '\t' << s.metric << '\t' << format_metric(s.mean_baseline) << '\t'
                 << format_metric(s.mean_candidate) << s.marker() << '\t' << t_buf << '\t' << p_buf << '\t'
                 << s.num_queries << '\n';
            rows.push_back({{"run", name},
                            {"metric", s.metric},
                            {"mean_baseline", s.mean_baseline},
                            {"mean_candidate", s.mean_candidate},
                            {"t", std::isfinite(s.t_statistic) ? nlohmann::ordered_json(s.t_statistic)
                                                               : nlohmann::ordered_json(s.t_statistic > 0 ? "inf" : "-inf")},
                            {"p", s.p_value},
                            {"df", s.df},
                            {"num_queries", s.num_queries},
                            {"alpha", s.alpha},
                            {"significant", s.significant},
                            {"marker", s.marker()}});
        }
    }
    if (a.output == "json") {
        std::cout << rows.dump(2) << '\n';
    } else {
        std::cout << text.str();
    }
    return kOk;
}

// ---- fewshot ----

struct FewshotArgs {
    Overrides o;
    std::string input, output;
    std::size_t max_terms = kMaxFewShotTerms;
    bool force = false;
};

int cmd_fewshot(const FewshotArgs& a) {
    const auto c = load_config(a.o);
    if (a.max_terms == 0 || a.max_terms > kMaxFewShotTerms) {
        throw ConfigError("--max-terms must be in [1, " + std::to_string(kMaxFewShotTerms) + "]");
    }
    const auto in_path = a.input.empty() ? require_path(c.llm.fewshot, "llm.fewshot") : cli_path(a.input);
    const auto index = load_index(c);

    // expansion_terms in the input are ignored and may be missing.
    std::ifstream in(in_path);
    if (!in) throw DataError("cannot open " + in_path);
    FewShotSet set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            FewShotExample e{j.at("query").get<std::string>(), j.at("passage").get<std::string>(), {}};
            for (const auto& t : make_fewshot_expansions(e.passage, index, a.max_terms)) e.expansion_terms.push_back(t.term);
            set.examples.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(in_path + ": malformed record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    set.validate();
    std::ostringstream out;
    write_fewshot(out, set);
    if (a.output.empty() || a.output == "-") {
        std::cout << out.str();
    } else {
        const auto p = cli_path(a.output);
        if (p != in_path) refuse_overwrite(p, a.force);
        write_file(p, out.str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"query expansion experiments over a BM25 index"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "build an index from a corpus");
    add_config_flag(index_cmd, index_args.o);
    index_cmd->add_option("--corpus", index_args.o.corpus, "corpus file");
    index_cmd->add_option("--format", index_args.o.format, "tsv | jsonl");
    add_index_flags(index_cmd, index_args.o);
    index_cmd->add_option("--threads", index_args.threads, "analysis threads")->check(CLI::PositiveNumber);
    index_cmd->add_flag("--force", index_args.force, "rebuild an existing index");

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "retrieve every topic and write a run file");
    add_config_flag(search_cmd, search_args.o);
    add_search_flags(search_cmd, search_args.o);
    search_cmd->add_option("--qrels", search_args.o.qrels, "qrels for an evaluation summary");
    search_cmd->add_option("--output-dir", search_args.o.output_dir, "where run files go");
    search_cmd->add_option("--run-tag", search_args.o.run_tag, "run name");
    search_cmd->add_option("--workers", search_args.o.workers, "concurrent queries")->check(CLI::PositiveNumber);
    search_cmd->add_flag("--force", search_args.force, "overwrite existing outputs");

    ExpandArgs expand_args;
    auto* expand_cmd = app.add_subcommand("expand", "show prompt, completion and expanded query for one topic");
    add_config_flag(expand_cmd, expand_args.o);
    add_search_flags(expand_cmd, expand_args.o);
    expand_cmd->add_option("-q,--query-id", expand_args.query_id, "topic id")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a run file");
    eval_cmd->add_option("-c,--config", eval_args.config, "config supplying qrels")->check(CLI::ExistingFile);
    eval_cmd->add_option("--run", eval_args.run, "TREC run file")->required();
    eval_cmd->add_option("--qrels", eval_args.qrels, "qrels file");
    eval_cmd->add_option("--metrics", eval_args.metrics, "e.g. recall@1000,mrr@10,ndcg@10")->delimiter(',');
    eval_cmd->add_option("--tag", eval_args.tag, "run tag in the report");
    eval_cmd->add_flag("--per-query", eval_args.per_query, "list per-query values");
    eval_cmd->add_option("--output", eval_args.output, "text | json")->check(CLI::IsMember({"text", "json"}));

    CompareArgs compare_args;
    auto* compare_cmd = app.add_subcommand("compare", "paired t-test of runs against a baseline");
    compare_cmd->add_option("-c,--config", compare_args.config, "config supplying qrels")->check(CLI::ExistingFile);
    compare_cmd->add_option("--baseline", compare_args.baseline, "baseline run")->required();
    compare_cmd->add_option("--run", compare_args.runs, "candidate run (repeatable)")->required();
    compare_cmd->add_option("--qrels", compare_args.qrels, "qrels file");
    compare_cmd->add_option("--metrics", compare_args.metrics, "metrics to test")->delimiter(',');
    compare_cmd->add_option("--alpha", compare_args.alpha, "significance level");
    compare_cmd->add_option("--output", compare_args.output, "text | json")->check(CLI::IsMember({"text", "json"}));

    FewshotArgs fewshot_args;
    auto* fewshot_cmd = app.add_subcommand("fewshot", "recompute few-shot expansion terms from an index");
    add_config_flag(fewshot_cmd, fewshot_args.o);
    add_index_flags(fewshot_cmd, fewshot_args.o);
    fewshot_cmd->add_option("--input", fewshot_args.input, "jsonl of query/passage pairs");
    fewshot_cmd->add_option("-o,--output", fewshot_args.output, "output jsonl (default stdout)");
    fewshot_cmd->add_option("--max-terms", fewshot_args.max_terms, "terms per example");
    fewshot_cmd->add_flag("--force", fewshot_args.force, "overwrite the output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*index_cmd) return cmd_index(index_args);
        if (*search_cmd) return cmd_search(search_args);
        if (*expand_cmd) return cmd_expand(expand_args);
        if (*eval_cmd) return cmd_eval(eval_args);
        if (*compare_cmd) return cmd_compare(compare_args);
        if (*fewshot_cmd) return cmd_fewshot(fewshot_args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const EndpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kEndpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
