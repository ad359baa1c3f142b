// Command-line front end: index, search, expand, dense-rank, rerank,
// evaluate, pipeline, ablate. Exit codes: 0 success, 1 config error, 2 data
// error, 3 all queries failed.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlret/cache.hpp"
#include "mlret/config.hpp"
#include "mlret/corpus.hpp"
#include "mlret/dense.hpp"
#include "mlret/errors.hpp"
#include "mlret/evaluation.hpp"
#include "mlret/expansion.hpp"
#include "mlret/pipeline.hpp"
#include "mlret/rerank.hpp"
#include "mlret/sparse.hpp"
#include "mlret/stub_providers.hpp"
#include "mlret/textproc.hpp"

namespace {

using namespace mlret;
using nlohmann::json;

// Flags shared by the provider-backed subcommands.
struct ProviderFlags {
    std::string provider = "stub";  // stub | http
    std::string endpoint;
    std::string credential_env;
    std::string fixture;  // stub generator only
    std::string echo;     // stub generator only
    std::string cache_dir;
    bool no_cache = false;
};

void add_provider_flags(CLI::App* cmd, ProviderFlags& f, bool generator) {
    cmd->add_option("--provider", f.provider, "Provider kind: stub or http")
        ->check(CLI::IsMember({"stub", "http"}))
        ->capture_default_str();
    cmd->add_option("--endpoint", f.endpoint, "HTTP provider endpoint URL");
    cmd->add_option("--credential-env", f.credential_env,
                    "Environment variable holding the bearer token");
    if (generator) {
        cmd->add_option("--fixture", f.fixture,
                        "Stub fixture JSONL ({\"query_id\", \"pseudo_doc\"})");
        cmd->add_option("--echo", f.echo, "Stub returns this text for every prompt");
    }
    cmd->add_option("--cache-dir", f.cache_dir, "Directory for the response cache");
    cmd->add_flag("--no-cache", f.no_cache, "Bypass the response cache");
}

config::ProviderConfig to_provider_config(const ProviderFlags& f) {
    config::ProviderConfig p;
    p.kind = f.provider == "http" ? config::ProviderKind::http : config::ProviderKind::stub;
    if (p.kind == config::ProviderKind::http && f.endpoint.empty())
        throw config_error("--endpoint is required with --provider http");
    p.endpoint = f.endpoint;
    p.credential_env = f.credential_env;
    p.fixture = f.fixture;
    p.echo = f.echo;
    return p;
}

std::optional<cache::DiskCache> open_cache(const ProviderFlags& f) {
    if (f.no_cache || f.cache_dir.empty()) return std::nullopt;
    return std::make_optional<cache::DiskCache>(f.cache_dir);
}

void apply_stopwords_flag(const std::string& path) {
    if (!path.empty()) textproc::set_active_stopwords(textproc::StopwordList::load(path));
}

void sort_queries(std::vector<corpus::Query>& queries) {
    std::sort(queries.begin(), queries.end(),
              [](const corpus::Query& a, const corpus::Query& b) {
                  return a.query_id < b.query_id;
              });
}

// Groups run entries per query, preserving rank order, sorted by query_id.
std::map<std::string, std::vector<evaluation::RunEntry>> group_run(
    const std::vector<evaluation::RunEntry>& entries) {
    std::map<std::string, std::vector<evaluation::RunEntry>> grouped;
    for (const auto& e : entries) grouped[e.query_id].push_back(e);
    return grouped;
}

std::unique_ptr<providers::Embedder> make_embedder_cli(const config::ProviderConfig& p) {
    if (p.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = p.endpoint;
        opt.credential_env = p.credential_env;
        return std::make_unique<providers::HttpEmbedder>(p.endpoint, opt);
    }
    return std::make_unique<stub::StubEmbedder>();
}

std::unique_ptr<providers::LogitProvider> make_scorer_cli(const config::ProviderConfig& p) {
    if (p.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = p.endpoint;
        opt.credential_env = p.credential_env;
        return std::make_unique<providers::HttpLogitProvider>(p.endpoint, opt);
    }
    return std::make_unique<stub::StubScorer>();
}

int cmd_index(const std::string& corpus_path, const std::string& out,
              const std::string& stopwords, unsigned workers) {
    apply_stopwords_flag(stopwords);
    const auto corp = corpus::ingest_corpus(corpus_path);
    const auto index = sparse::build_index(corp, workers);
    if (const auto parent = std::filesystem::path(out).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    sparse::save_index(index, out);
    std::cout << "indexed " << index.num_docs() << " docs, " << index.postings.size()
              << " terms -> " << out << "\n";
    return 0;
}

int cmd_search(const std::string& index_path, const std::string& queries_path, std::size_t top_n,
               const std::string& out, const std::string& tag, const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    const auto index = sparse::load_index(index_path);
    auto queries = expansion::read_queries_auto(queries_path);
    sort_queries(queries);

    std::vector<evaluation::RunEntry> entries;
    for (const auto& q : queries) {
        const auto candidates = sparse::sparse_search(index, textproc::preprocess(q.text), top_n);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            entries.push_back({q.query_id, candidates[i].doc_id, static_cast<int>(i + 1),
                               pipeline::synthetic_score(static_cast<int>(i + 1)), tag});
    }
    evaluation::write_run(entries, out);
    std::cout << "searched " << queries.size() << " queries -> " << out << "\n";
    return 0;
}

int cmd_expand(const std::string& queries_path, std::size_t theta, const std::string& out,
               const ProviderFlags& pf, const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    auto queries = corpus::read_queries(queries_path);
    sort_queries(queries);

    const auto pcfg = to_provider_config(pf);
    std::unique_ptr<providers::TextGenerator> generator;
    if (pcfg.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = pcfg.endpoint;
        opt.credential_env = pcfg.credential_env;
        generator = std::make_unique<providers::HttpTextGenerator>(pcfg.endpoint, opt);
    } else if (!pcfg.echo.empty()) {
        generator = std::make_unique<stub::StubGenerator>(stub::StubGenerator::echo(pcfg.echo));
    } else if (!pcfg.fixture.empty()) {
        std::unordered_map<std::string, std::string> by_id;
        for (const auto& q : queries) by_id.emplace(q.query_id, q.text);
        generator = std::make_unique<stub::StubGenerator>(
            stub::StubGenerator::from_fixture(pcfg.fixture, by_id));
    } else {
        generator = std::make_unique<stub::StubGenerator>();
    }

    const auto disk_cache = open_cache(pf);
    const cache::DiskCache* cache_ptr = disk_cache ? &*disk_cache : nullptr;

    std::vector<expansion::ExpandedQuery> expanded;
    std::size_t degraded = 0;
    for (const auto& q : queries) {
        const auto pseudo = expansion::generate_pseudo_doc(*generator, q.text, cache_ptr);
        std::vector<std::string> terms;
        if (!pseudo.empty()) terms = expansion::extract_terms(pseudo, q.text, theta);
        if (terms.empty()) ++degraded;
        expanded.push_back(expansion::expand_query(q.query_id, q.text, std::move(terms)));
    }
    expansion::write_expanded_queries(expanded, out);
    std::cout << "expanded " << queries.size() << " queries (" << degraded << " degraded) -> "
              << out << "\n";
    return 0;
}

int cmd_dense_rank(const std::string& run_path, const std::string& queries_path,
                   const std::string& corpus_path, std::size_t dim, std::size_t max_units,
                   std::size_t cutoff, const std::string& out, const std::string& tag,
                   const ProviderFlags& pf, const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    const auto corp = corpus::ingest_corpus(corpus_path);
    const auto grouped = group_run(evaluation::read_run(run_path));
    const auto queries = expansion::read_queries_auto(queries_path);
    std::unordered_map<std::string, std::string> text_by_id;
    for (const auto& q : queries) text_by_id.emplace(q.query_id, q.text);

    const auto embedder = make_embedder_cli(to_provider_config(pf));
    const auto disk_cache = open_cache(pf);
    const cache::DiskCache* cache_ptr = disk_cache ? &*disk_cache : nullptr;

    std::vector<evaluation::RunEntry> entries;
    for (const auto& [qid, run] : grouped) {
        auto qt = text_by_id.find(qid);
        if (qt == text_by_id.end())
            throw data_error("run query \"" + qid + "\" not present in " + queries_path);

        std::vector<std::string> doc_texts;
        doc_texts.reserve(run.size());
        for (const auto& e : run) {
            const auto* doc = corp.find(e.doc_id);
            if (!doc) throw data_error("run doc \"" + e.doc_id + "\" not in corpus");
            doc_texts.push_back(corpus::translation_view(*doc, max_units));
        }
        const auto qvec = dense::embed(*embedder, qt->second, "query", dim, cache_ptr);
        const auto dvecs = dense::embed_batch(*embedder, doc_texts, "document", dim, cache_ptr);
        std::vector<std::pair<std::string, dense::Vector>> cands;
        cands.reserve(run.size());
        for (std::size_t i = 0; i < run.size(); ++i) cands.emplace_back(run[i].doc_id, dvecs[i]);

        const auto ranked = dense::dense_rank(qid, qvec, cands, cutoff);
        for (std::size_t i = 0; i < ranked.entries.size(); ++i)
            entries.push_back({qid, ranked.entries[i].doc_id, static_cast<int>(i + 1),
                               pipeline::synthetic_score(static_cast<int>(i + 1)), tag});
    }
    evaluation::write_run(entries, out);
    std::cout << "dense-ranked " << grouped.size() << " queries -> " << out << "\n";
    return 0;
}

int cmd_rerank(const std::string& run_path, const std::string& queries_path,
               const std::string& corpus_path, std::size_t k, std::size_t max_units,
               const std::string& out, const std::string& diag_path, const std::string& tag,
               const ProviderFlags& pf, const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    const auto corp = corpus::ingest_corpus(corpus_path);
    const auto grouped = group_run(evaluation::read_run(run_path));
    const auto queries = expansion::read_queries_auto(queries_path);
    std::unordered_map<std::string, std::string> text_by_id;
    for (const auto& q : queries) text_by_id.emplace(q.query_id, q.text);

    const auto scorer = make_scorer_cli(to_provider_config(pf));
    const auto disk_cache = open_cache(pf);
    const cache::DiskCache* cache_ptr = disk_cache ? &*disk_cache : nullptr;

    std::vector<evaluation::RunEntry> entries;
    json diag = json::object();
    for (const auto& [qid, run] : grouped) {
        auto qt = text_by_id.find(qid);
        if (qt == text_by_id.end())
            throw data_error("run query \"" + qid + "\" not present in " + queries_path);

        // Treat the input run as the dense list; its scores only carry rank
        // order, which is all the merge needs.
        dense::DenseRankedList dlist;
        dlist.query_id = qid;
        dlist.entries.reserve(run.size());
        for (const auto& e : run) dlist.entries.push_back({e.doc_id, e.score});

        const std::size_t head = std::min<std::size_t>(k, dlist.entries.size());
        std::unordered_map<std::string, double> probs;
        json detail = json::array();
        for (std::size_t i = 0; i < head; ++i) {
            const auto& doc_id = dlist.entries[i].doc_id;
            const auto* doc = corp.find(doc_id);
            if (!doc) throw data_error("run doc \"" + doc_id + "\" not in corpus");
            providers::LabelLogits logits{};
            const double p = rerank::score_pair(*scorer, qt->second,
                                                corpus::translation_view(*doc, max_units),
                                                cache_ptr, &logits);
            probs.emplace(doc_id, p);
            detail.push_back(json{{"doc_id", doc_id},
                                  {"yes_logit", logits.yes_logit},
                                  {"no_logit", logits.no_logit},
                                  {"probability", p}});
        }
        const auto merged = rerank::rerank_merge(dlist, probs, k);
        for (std::size_t i = 0; i < merged.entries.size(); ++i)
            entries.push_back({qid, merged.entries[i].doc_id, static_cast<int>(i + 1),
                               pipeline::synthetic_score(static_cast<int>(i + 1)), tag});
        diag[qid] = {{"head_size", head}, {"rerank", std::move(detail)}};
    }
    evaluation::write_run(entries, out);
    if (!diag_path.empty()) {
        std::ofstream df(diag_path);
        if (!df) throw data_error("cannot write diagnostics: " + diag_path);
        df << diag.dump(2) << '\n';
    }
    std::cout << "reranked " << grouped.size() << " queries -> " << out << "\n";
    return 0;
}

int cmd_evaluate(const std::string& run_path, const std::string& qrels_path, std::size_t k,
                 std::size_t n, const std::string& gain, const std::string& out,
                 bool per_query) {
    const auto run = evaluation::read_run(run_path);
    const auto qrels = evaluation::read_qrels(qrels_path);
    const auto mode =
        gain == "linear" ? evaluation::GainMode::linear : evaluation::GainMode::exponential;
    const auto report = evaluation::evaluate_run(run, qrels, k, n, mode);
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw data_error("cannot write report: " + out);
        f << evaluation::report_to_json(report);
    }
    std::cout << evaluation::report_to_table(report, per_query);
    return 0;
}

int cmd_pipeline(const std::string& config_path, const std::string& setting, bool no_cache,
                 const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    auto cfg = config::load_config(config_path);
    if (!setting.empty()) cfg = pipeline::apply_setting(cfg, pipeline::ablation_setting(setting));
    if (no_cache) cfg.use_cache = false;

    const auto result = pipeline::run_pipeline(cfg);
    std::cout << "pipeline: " << (result.total_queries - result.failed_queries) << "/"
              << result.total_queries << " queries ok\n"
              << "run:         " << result.run_path << "\n"
              << "diagnostics: " << result.diagnostics_path << "\n";
    if (result.total_queries > 0 && result.failed_queries == result.total_queries) return 3;
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& settings_arg, bool no_cache,
               const std::string& stopwords) {
    apply_stopwords_flag(stopwords);
    auto cfg = config::load_config(config_path);
    if (no_cache) cfg.use_cache = false;

    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= settings_arg.size()) {
        const auto comma = settings_arg.find(',', start);
        const auto end = comma == std::string::npos ? settings_arg.size() : comma;
        if (end > start) names.push_back(settings_arg.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (names.empty()) throw config_error("--settings must name at least one setting or \"all\"");

    const auto result = pipeline::run_ablation(cfg, names);
    std::ifstream table(result.report_table_path);
    std::cout << table.rdbuf();
    std::cout << "report: " << result.report_json_path << "\n";
    for (const auto& row : result.rows)
        if (!row.ok) return 3;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-stage cross-lingual news retrieval"};
    app.require_subcommand(1);

    // index
    auto* index_cmd = app.add_subcommand("index", "Build the inverted index from a corpus");
    std::string ix_corpus, ix_out, ix_stopwords;
    unsigned ix_workers = 1;
    index_cmd->add_option("--corpus", ix_corpus, "Corpus JSONL path")->required();
    index_cmd->add_option("--out", ix_out, "Output index path")->required();
    index_cmd->add_option("--workers", ix_workers, "Index-build worker threads")
        ->capture_default_str();
    index_cmd->add_option("--stopwords", ix_stopwords, "Stopword list override");

    // search
    auto* search_cmd = app.add_subcommand("search", "BM25 search producing a TREC run");
    std::string se_index, se_queries, se_out, se_tag = "mlret", se_stopwords;
    std::size_t se_top_n = 2000;
    search_cmd->add_option("--index", se_index, "Index path")->required();
    search_cmd->add_option("--queries", se_queries, "Queries JSONL (base or expanded)")
        ->required();
    search_cmd->add_option("--top-n", se_top_n, "Candidates per query")->capture_default_str();
    search_cmd->add_option("--out", se_out, "Output run path")->required();
    search_cmd->add_option("--tag", se_tag, "Run tag")->capture_default_str();
    search_cmd->add_option("--stopwords", se_stopwords, "Stopword list override");

    // expand
    auto* expand_cmd = app.add_subcommand("expand", "GRF query expansion");
    std::string ex_queries, ex_out, ex_stopwords;
    std::size_t ex_theta = 30;
    ProviderFlags ex_pf;
    expand_cmd->add_option("--queries", ex_queries, "Base queries JSONL")->required();
    expand_cmd->add_option("--theta", ex_theta, "Expansion terms per query")
        ->capture_default_str();
    expand_cmd->add_option("--out", ex_out, "Output expanded-queries JSONL")->required();
    expand_cmd->add_option("--stopwords", ex_stopwords, "Stopword list override");
    add_provider_flags(expand_cmd, ex_pf, /*generator=*/true);

    // dense-rank
    auto* dense_cmd = app.add_subcommand("dense-rank", "Dense cosine re-ranking of a run");
    std::string dr_run, dr_queries, dr_corpus, dr_out, dr_tag = "mlret", dr_stopwords;
    std::size_t dr_dim = 1024, dr_max_units = 5120, dr_cutoff = 1000;
    ProviderFlags dr_pf;
    dense_cmd->add_option("--index-run", dr_run, "Sparse run to re-rank")->required();
    dense_cmd->add_option("--queries", dr_queries, "Queries JSONL (base or expanded)")
        ->required();
    dense_cmd->add_option("--corpus", dr_corpus, "Corpus JSONL path")->required();
    dense_cmd->add_option("--dim", dr_dim, "Embedding dimension")->capture_default_str();
    dense_cmd->add_option("--max-units", dr_max_units, "Document unit budget")
        ->capture_default_str();
    dense_cmd->add_option("--cutoff", dr_cutoff, "Dense list cutoff")->capture_default_str();
    dense_cmd->add_option("--out", dr_out, "Output run path")->required();
    dense_cmd->add_option("--tag", dr_tag, "Run tag")->capture_default_str();
    dense_cmd->add_option("--stopwords", dr_stopwords, "Stopword list override");
    add_provider_flags(dense_cmd, dr_pf, /*generator=*/false);

    // rerank
    auto* rerank_cmd = app.add_subcommand("rerank", "Pointwise rerank of the top-k");
    std::string rr_run, rr_queries, rr_corpus, rr_out, rr_diag, rr_tag = "mlret", rr_stopwords;
    std::size_t rr_k = 20, rr_max_units = 5120;
    ProviderFlags rr_pf;
    rerank_cmd->add_option("--dense-run", rr_run, "Dense run to rerank")->required();
    rerank_cmd->add_option("--queries", rr_queries, "Queries JSONL (base or expanded)")
        ->required();
    rerank_cmd->add_option("--corpus", rr_corpus, "Corpus JSONL path")->required();
    rerank_cmd->add_option("--k", rr_k, "Rerank depth")->capture_default_str();
    rerank_cmd->add_option("--max-units", rr_max_units, "Document unit budget")
        ->capture_default_str();
    rerank_cmd->add_option("--out", rr_out, "Output run path")->required();
    rerank_cmd->add_option("--diag", rr_diag, "Sidecar JSON with logits and probabilities");
    rerank_cmd->add_option("--tag", rr_tag, "Run tag")->capture_default_str();
    rerank_cmd->add_option("--stopwords", rr_stopwords, "Stopword list override");
    add_provider_flags(rerank_cmd, rr_pf, /*generator=*/false);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a run against qrels");
    std::string ev_run, ev_qrels, ev_gain = "exponential", ev_out;
    std::size_t ev_k = 20, ev_n = 1000;
    bool ev_per_query = false;
    eval_cmd->add_option("--run", ev_run, "Run path")->required();
    eval_cmd->add_option("--qrels", ev_qrels, "Qrels path")->required();
    eval_cmd->add_option("--k", ev_k, "Cutoff for nDCG and Judged")->capture_default_str();
    eval_cmd->add_option("--n", ev_n, "Cutoff for recall")->capture_default_str();
    eval_cmd->add_option("--gain", ev_gain, "nDCG gain mode")
        ->check(CLI::IsMember({"exponential", "linear"}))
        ->capture_default_str();
    eval_cmd->add_option("--out", ev_out, "Report JSON path");
    eval_cmd->add_flag("--per-query", ev_per_query, "Print per-query rows");

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the configured pipeline end to end");
    std::string pl_config, pl_setting, pl_stopwords;
    bool pl_no_cache = false;
    pipe_cmd->add_option("--config", pl_config, "Pipeline config file")->required();
    pipe_cmd->add_option("--setting", pl_setting, "Apply one ablation setting");
    pipe_cmd->add_flag("--no-cache", pl_no_cache, "Bypass the response cache");
    pipe_cmd->add_option("--stopwords", pl_stopwords, "Stopword list override");

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "Run the ablation settings and report");
    std::string ab_config, ab_settings = "all", ab_stopwords;
    bool ab_no_cache = false;
    abl_cmd->add_option("--config", ab_config, "Pipeline config file")->required();
    abl_cmd->add_option("--settings", ab_settings, "\"all\" or comma-separated setting names")
        ->capture_default_str();
    abl_cmd->add_flag("--no-cache", ab_no_cache, "Bypass the response cache");
    abl_cmd->add_option("--stopwords", ab_stopwords, "Stopword list override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad usage is a config error
    }

    try {
        if (index_cmd->parsed()) return cmd_index(ix_corpus, ix_out, ix_stopwords, ix_workers);
        if (search_cmd->parsed())
            return cmd_search(se_index, se_queries, se_top_n, se_out, se_tag, se_stopwords);
        if (expand_cmd->parsed())
            return cmd_expand(ex_queries, ex_theta, ex_out, ex_pf, ex_stopwords);
        if (dense_cmd->parsed())
            return cmd_dense_rank(dr_run, dr_queries, dr_corpus, dr_dim, dr_max_units, dr_cutoff,
                                  dr_out, dr_tag, dr_pf, dr_stopwords);
        if (rerank_cmd->parsed())
            return cmd_rerank(rr_run, rr_queries, rr_corpus, rr_k, rr_max_units, rr_out, rr_diag,
                              rr_tag, rr_pf, rr_stopwords);
        if (eval_cmd->parsed())
            return cmd_evaluate(ev_run, ev_qrels, ev_k, ev_n, ev_gain, ev_out, ev_per_query);
        if (pipe_cmd->parsed())
            return cmd_pipeline(pl_config, pl_setting, pl_no_cache, pl_stopwords);
        if (abl_cmd->parsed()) return cmd_ablate(ab_config, ab_settings, ab_no_cache, ab_stopwords);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
