#include "mlret/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <thread>

#include <json.hpp>

#include "mlret/cache.hpp"
#include "mlret/corpus.hpp"
#include "mlret/dense.hpp"
#include "mlret/errors.hpp"
#include "mlret/expansion.hpp"
#include "mlret/rerank.hpp"
#include "mlret/sparse.hpp"
#include "mlret/stub_providers.hpp"
#include "mlret/textproc.hpp"

namespace mlret::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::unique_ptr<providers::TextGenerator> make_generator(
    const config::ProviderConfig& p, const std::vector<corpus::Query>& queries) {
    if (p.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = p.endpoint;
        opt.credential_env = p.credential_env;
        return std::make_unique<providers::HttpTextGenerator>(p.endpoint, opt);
    }
    if (!p.echo.empty())
        return std::make_unique<stub::StubGenerator>(stub::StubGenerator::echo(p.echo));
    std::unordered_map<std::string, std::string> by_id;
    for (const auto& q : queries) by_id.emplace(q.query_id, q.text);
    if (!p.fixture.empty())
        return std::make_unique<stub::StubGenerator>(
            stub::StubGenerator::from_fixture(p.fixture, by_id));
    // No fixture and no echo text: the stub echoes the query back, which the
    // term filter empties out — expansion degrades to q' = q everywhere.
    return std::make_unique<stub::StubGenerator>();
}

std::unique_ptr<providers::Embedder> make_embedder(const config::ProviderConfig& p) {
    if (p.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = p.endpoint;
        opt.credential_env = p.credential_env;
        return std::make_unique<providers::HttpEmbedder>(p.endpoint, opt);
    }
    return std::make_unique<stub::StubEmbedder>();
}

std::unique_ptr<providers::LogitProvider> make_scorer(const config::ProviderConfig& p) {
    if (p.kind == config::ProviderKind::http) {
        providers::HttpOptions opt;
        opt.endpoint = p.endpoint;
        opt.credential_env = p.credential_env;
        return std::make_unique<providers::HttpLogitProvider>(p.endpoint, opt);
    }
    return std::make_unique<stub::StubScorer>();
}

std::size_t count_units(const std::string& text) {
    std::size_t units = 0;
    bool in_token = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!ws && !in_token) ++units;
        in_token = !ws;
    }
    return units;
}

// Everything computed for one query, assembled into the run + diagnostics
// after all workers finish.
struct QueryOutcome {
    bool ok = false;
    std::string error;
    bool degraded_expansion = false;
    std::optional<expansion::ExpandedQuery> expanded;
    std::size_t sparse_candidates = 0;
    std::size_t dense_entries = 0;
    std::size_t doc_truncations = 0;
    // Final ranking with true stage scores; origin is "bm25", "dense", or
    // "reranked".
    struct Scored {
        std::string doc_id;
        double score;
        const char* origin;
    };
    std::vector<Scored> ranking;
    std::vector<json> rerank_detail;  // {doc_id, yes_logit, no_logit, probability}
};

struct Shared {
    const config::PipelineConfig& cfg;
    const corpus::Corpus& corpus;
    const sparse::InvertedIndex& index;
    const std::vector<corpus::Query>& queries;  // sorted by query_id
    providers::TextGenerator* generator;
    providers::Embedder* embedder;
    providers::LogitProvider* scorer;
    const cache::DiskCache* cache;
};

QueryOutcome process_query(const Shared& s, const corpus::Query& query) {
    QueryOutcome out;
    const auto& cfg = s.cfg;

    if (cfg.expansion_enabled) {
        const std::string pseudo =
            expansion::generate_pseudo_doc(*s.generator, query.text, s.cache);
        std::vector<std::string> terms;
        if (pseudo.empty()) out.degraded_expansion = true;
        else terms = expansion::extract_terms(pseudo, query.text, cfg.theta);
        if (terms.empty()) out.degraded_expansion = true;
        out.expanded = expansion::expand_query(query.query_id, query.text, std::move(terms));
    }

    const auto query_text = [&](config::Source source) -> const std::string& {
        if (source == config::Source::expanded && out.expanded)
            return out.expanded->expanded_text;
        return query.text;
    };

    const auto sparse_terms = textproc::preprocess(query_text(cfg.sparse_query_source));
    const auto candidates = sparse::sparse_search(s.index, sparse_terms, cfg.sparse_top_n);
    out.sparse_candidates = candidates.size();

    if (!cfg.dense_enabled) {
        out.ranking.reserve(candidates.size());
        for (const auto& c : candidates) out.ranking.push_back({c.doc_id, c.score, "bm25"});
        out.ok = true;
        return out;
    }

    std::vector<std::string> doc_texts;
    doc_texts.reserve(candidates.size());
    for (const auto& c : candidates) {
        const auto* doc = s.corpus.find(c.doc_id);
        if (!doc) throw data_error("candidate doc \"" + c.doc_id + "\" not in corpus");
        std::string view = corpus::translation_view(*doc, cfg.max_units);
        if (count_units(corpus::translation_view(
                *doc, std::numeric_limits<std::size_t>::max())) > cfg.max_units)
            ++out.doc_truncations;
        doc_texts.push_back(std::move(view));
    }

    const auto query_vec = dense::embed(*s.embedder, query_text(cfg.dense_query_source), "query",
                                        cfg.dim, s.cache);
    const auto doc_vecs = dense::embed_batch(*s.embedder, doc_texts, "document", cfg.dim, s.cache);

    std::vector<std::pair<std::string, dense::Vector>> embedded;
    embedded.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        embedded.emplace_back(candidates[i].doc_id, doc_vecs[i]);
    const auto dense_list =
        dense::dense_rank(query.query_id, query_vec, embedded, cfg.dense_cutoff);
    out.dense_entries = dense_list.entries.size();

    if (!cfg.rerank_enabled) {
        out.ranking.reserve(dense_list.entries.size());
        for (const auto& e : dense_list.entries)
            out.ranking.push_back({e.doc_id, e.similarity, "dense"});
        out.ok = true;
        return out;
    }

    std::unordered_map<std::string, std::string> text_by_doc;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        text_by_doc.emplace(candidates[i].doc_id, doc_texts[i]);

    const std::size_t head = std::min<std::size_t>(cfg.k, dense_list.entries.size());
    std::unordered_map<std::string, double> probs;
    const std::string& rerank_text = query_text(cfg.rerank_query_source);
    for (std::size_t i = 0; i < head; ++i) {
        const auto& doc_id = dense_list.entries[i].doc_id;
        providers::LabelLogits logits{};
        const double p =
            rerank::score_pair(*s.scorer, rerank_text, text_by_doc.at(doc_id), s.cache, &logits);
        probs.emplace(doc_id, p);
        out.rerank_detail.push_back(json{{"doc_id", doc_id},
                                         {"yes_logit", logits.yes_logit},
                                         {"no_logit", logits.no_logit},
                                         {"probability", p}});
    }

    const auto merged = rerank::rerank_merge(dense_list, probs, cfg.k);
    out.ranking.reserve(merged.entries.size());
    for (const auto& e : merged.entries)
        out.ranking.push_back(
            {e.doc_id, e.score, e.origin == rerank::Origin::reranked ? "reranked" : "dense"});
    out.ok = true;
    return out;
}

}  // namespace

PipelineResult run_pipeline(const config::PipelineConfig& cfg) {
    config::validate(cfg);

    const auto corp = corpus::ingest_corpus(cfg.corpus_path);
    auto queries = corpus::read_queries(cfg.queries_path);
    std::sort(queries.begin(), queries.end(),
              [](const corpus::Query& a, const corpus::Query& b) {
                  return a.query_id < b.query_id;
              });

    sparse::InvertedIndex index;
    if (fs::exists(cfg.index_path)) {
        index = sparse::load_index(cfg.index_path);
        if (index.doc_ids.size() != corp.documents.size())
            throw data_error("index at " + cfg.index_path + " holds " +
                             std::to_string(index.doc_ids.size()) + " docs but the corpus has " +
                             std::to_string(corp.documents.size()));
    } else {
        index = sparse::build_index(corp, cfg.workers);
        if (const auto parent = fs::path(cfg.index_path).parent_path(); !parent.empty())
            fs::create_directories(parent);
        sparse::save_index(index, cfg.index_path);
    }

    std::optional<cache::DiskCache> disk_cache;
    if (cfg.use_cache) disk_cache.emplace(cfg.cache_dir);

    const auto generator = make_generator(cfg.generator, queries);
    const auto embedder = make_embedder(cfg.embedder);
    const auto scorer = make_scorer(cfg.scorer);

    Shared shared{cfg,          corp,           index,        queries,
                  generator.get(), embedder.get(), scorer.get(),
                  disk_cache ? &*disk_cache : nullptr};

    // One independent job per query; outcomes land at the query's position so
    // assembly order is the sorted query order regardless of worker count.
    std::vector<QueryOutcome> outcomes(queries.size());
    const unsigned workers =
        std::max(1u, std::min<unsigned>(cfg.workers,
                                        static_cast<unsigned>(queries.size() ? queries.size() : 1)));
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= queries.size()) return;
            try {
                outcomes[i] = process_query(shared, queries[i]);
            } catch (const std::exception& e) {
                outcomes[i] = QueryOutcome{};
                outcomes[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    fs::create_directories(cfg.output_dir);

    PipelineResult result;
    result.total_queries = queries.size();
    json diag_queries = json::object();
    std::vector<expansion::ExpandedQuery> expanded;

    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto& q = queries[i];
        auto& out = outcomes[i];
        json qd;
        if (!out.ok) {
            ++result.failed_queries;
            qd["status"] = "failed";
            qd["error"] = out.error;
            diag_queries[q.query_id] = std::move(qd);
            continue;
        }
        qd["status"] = "ok";
        qd["sparse_candidates"] = out.sparse_candidates;
        if (cfg.expansion_enabled) {
            qd["degraded_expansion"] = out.degraded_expansion;
            qd["expansion_terms"] = out.expanded->expansion_terms.size();
            expanded.push_back(*out.expanded);
        }
        if (cfg.dense_enabled) {
            qd["dense_entries"] = out.dense_entries;
            qd["doc_truncations"] = out.doc_truncations;
        }
        if (cfg.rerank_enabled) qd["rerank"] = out.rerank_detail;

        json scores = json::array();
        const std::size_t depth = std::min(out.ranking.size(), kOutputDepth);
        for (std::size_t r = 0; r < depth; ++r) {
            const auto& entry = out.ranking[r];
            result.entries.push_back({q.query_id, entry.doc_id, static_cast<int>(r + 1),
                                      synthetic_score(static_cast<int>(r + 1)), cfg.run_tag});
            scores.push_back(json{{"doc_id", entry.doc_id},
                                  {"score", entry.score},
                                  {"origin", entry.origin}});
        }
        qd["scores"] = std::move(scores);
        diag_queries[q.query_id] = std::move(qd);
    }

    result.run_path = cfg.output_dir + "/run.trec";
    evaluation::write_run(result.entries, result.run_path);

    if (cfg.expansion_enabled)
        expansion::write_expanded_queries(expanded, cfg.output_dir + "/expanded.jsonl");

    json diag = {
        {"run_tag", cfg.run_tag},
        {"stages",
         {{"expansion", cfg.expansion_enabled},
          {"dense", cfg.dense_enabled},
          {"rerank", cfg.rerank_enabled}}},
        {"sources",
         {{"sparse_query", config::source_name(cfg.sparse_query_source)},
          {"dense_query", config::source_name(cfg.dense_query_source)},
          {"rerank_query", config::source_name(cfg.rerank_query_source)}}},
        {"knobs",
         {{"theta", cfg.theta},
          {"sparse_top_n", cfg.sparse_top_n},
          {"dense_cutoff", cfg.dense_cutoff},
          {"k", cfg.k},
          {"dim", cfg.dim},
          {"max_units", cfg.max_units},
          {"workers", cfg.workers}}},
        {"total_queries", result.total_queries},
        {"failed_queries", result.failed_queries},
        {"queries", std::move(diag_queries)},
    };
    if (disk_cache) {
        diag["cache"] = {{"dir", disk_cache->dir()},
                         {"hits", disk_cache->hits()},
                         {"misses", disk_cache->misses()}};
    }
    result.diagnostics_path = cfg.output_dir + "/diagnostics.json";
    std::ofstream diag_out(result.diagnostics_path);
    if (!diag_out) throw data_error("cannot write diagnostics: " + result.diagnostics_path);
    diag_out << diag.dump(2) << '\n';

    return result;
}

const std::vector<AblationSetting>& ablation_settings() {
    static const std::vector<AblationSetting> settings = {
        {"BM25", config::Source::base, false, config::Source::base},
        {"BM25+GRF", config::Source::expanded, false, config::Source::base},
        {"Jina+BM25", config::Source::base, true, config::Source::base},
        {"JinaGRF+BM25", config::Source::base, true, config::Source::expanded},
        {"JinaGRF+BM25GRF", config::Source::expanded, true, config::Source::expanded},
    };
    return settings;
}

const AblationSetting& ablation_setting(const std::string& name) {
    for (const auto& s : ablation_settings())
        if (s.name == name) return s;
    std::string valid;
    for (const auto& s : ablation_settings()) {
        if (!valid.empty()) valid += ", ";
        valid += s.name;
    }
    throw config_error("unknown ablation setting \"" + name + "\" (valid: " + valid + ")");
}

config::PipelineConfig apply_setting(config::PipelineConfig base, const AblationSetting& s) {
    base.sparse_query_source = s.sparse_query_source;
    base.dense_enabled = s.dense_enabled;
    base.dense_query_source = s.dense_query_source;
    base.expansion_enabled = s.sparse_query_source == config::Source::expanded ||
                             (s.dense_enabled && s.dense_query_source == config::Source::expanded);
    base.rerank_enabled = false;  // Table-2 ablations carry no rerank stage
    base.run_tag = s.name;
    base.output_dir = base.output_dir + "/ablation/" + s.name;
    return base;
}

AblationResult run_ablation(const config::PipelineConfig& base,
                            const std::vector<std::string>& setting_names) {
    std::vector<AblationSetting> settings;
    if (setting_names.size() == 1 && setting_names[0] == "all") {
        settings = ablation_settings();
    } else {
        for (const auto& name : setting_names) settings.push_back(ablation_setting(name));
    }

    evaluation::Qrels qrels;
    if (base.qrels_path.empty()) throw config_error("paths.qrels is required for ablation");
    qrels = evaluation::read_qrels(base.qrels_path);

    AblationResult result;
    for (const auto& setting : settings) {
        AblationRow row;
        row.setting = setting;
        try {
            const auto cfg = apply_setting(base, setting);
            const auto pr = run_pipeline(cfg);
            if (pr.total_queries > 0 && pr.failed_queries == pr.total_queries)
                throw data_error("all queries failed (see " + pr.diagnostics_path + ")");
            row.run_path = pr.run_path;
            const auto run = evaluation::read_run(pr.run_path);
            row.exponential = evaluation::evaluate_run(run, qrels, base.k, kOutputDepth,
                                                       evaluation::GainMode::exponential);
            row.linear = evaluation::evaluate_run(run, qrels, base.k, kOutputDepth,
                                                  evaluation::GainMode::linear);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        result.rows.push_back(std::move(row));
    }

    const std::string dir = base.output_dir + "/ablation";
    fs::create_directories(dir);

    json rows = json::array();
    for (const auto& row : result.rows) {
        json r = {
            {"setting", row.setting.name},
            {"config",
             {{"sparse_query_source", config::source_name(row.setting.sparse_query_source)},
              {"dense_enabled", row.setting.dense_enabled},
              {"dense_query_source", config::source_name(row.setting.dense_query_source)},
              {"expansion_enabled",
               row.setting.sparse_query_source == config::Source::expanded ||
                   (row.setting.dense_enabled &&
                    row.setting.dense_query_source == config::Source::expanded)},
              {"rerank_enabled", false}}},
        };
        if (row.ok) {
            r["run"] = row.run_path;
            r["metrics"] = {
                {"exponential",
                 {{"ndcg_at_k", row.exponential.mean.ndcg_at_k},
                  {"judged_at_k", row.exponential.mean.judged_at_k},
                  {"recall_at_n", row.exponential.mean.recall_at_n}}},
                {"linear",
                 {{"ndcg_at_k", row.linear.mean.ndcg_at_k},
                  {"judged_at_k", row.linear.mean.judged_at_k},
                  {"recall_at_n", row.linear.mean.recall_at_n}}},
            };
        } else {
            r["error"] = row.error;
        }
        rows.push_back(std::move(r));
    }
    const json report = {{"k", base.k}, {"n", kOutputDepth}, {"settings", rows}};

    result.report_json_path = dir + "/report.json";
    {
        std::ofstream out(result.report_json_path);
        if (!out) throw data_error("cannot write ablation report: " + result.report_json_path);
        out << report.dump(2) << '\n';
    }

    // Table-2-shaped text table, one row per setting, both gain modes.
    const std::string kcol = std::to_string(base.k);
    std::vector<std::array<std::string, 5>> table;
    table.push_back({"setting", "R@" + std::to_string(kOutputDepth), "nDCG@" + kcol + "(exp)",
                     "nDCG@" + kcol + "(lin)", "Judged@" + kcol});
    const auto fixed4 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    for (const auto& row : result.rows) {
        if (row.ok)
            table.push_back({row.setting.name, fixed4(row.exponential.mean.recall_at_n),
                             fixed4(row.exponential.mean.ndcg_at_k),
                             fixed4(row.linear.mean.ndcg_at_k),
                             fixed4(row.exponential.mean.judged_at_k)});
        else
            table.push_back({row.setting.name, "-", "-", "-", "-"});
    }
    std::array<std::size_t, 5> width{};
    for (const auto& row : table)
        for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
    std::string text;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            if (c) text += "  ";
            text += table[r][c];
            if (c + 1 < 5) text.append(width[c] - table[r][c].size(), ' ');
        }
        text += '\n';
        if (r == 0) {
            for (std::size_t c = 0; c < 5; ++c) {
                if (c) text += "  ";
                text.append(width[c], '-');
            }
            text += '\n';
        }
    }
    for (const auto& row : result.rows)
        if (!row.ok) text += row.setting.name + ": " + row.error + "\n";

    result.report_table_path = dir + "/report.txt";
    {
        std::ofstream out(result.report_table_path);
        if (!out) throw data_error("cannot write ablation table: " + result.report_table_path);
        out << text;
    }
    return result;
}

}  // namespace mlret::pipeline
