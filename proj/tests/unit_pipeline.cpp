#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mlret/config.hpp"
#include "mlret/errors.hpp"
#include "mlret/evaluation.hpp"
#include "mlret/expansion.hpp"
#include "mlret/pipeline.hpp"
#include "test_util.hpp"

using namespace mlret;
using nlohmann::json;

namespace {

const std::string kFixtures = std::string(MLRET_SOURCE_DIR) + "/tests/fixtures/synth";

// Base config over the synthetic fixture with every optional stage off;
// tests flip the stages they need.
config::PipelineConfig fixture_config(const testutil::TempDir& tmp) {
    config::PipelineConfig cfg;
    cfg.corpus_path = kFixtures + "/corpus.jsonl";
    cfg.queries_path = kFixtures + "/queries.jsonl";
    cfg.qrels_path = kFixtures + "/qrels.txt";
    cfg.index_path = tmp.file("index.bin");
    cfg.cache_dir = tmp.file("cache");
    cfg.output_dir = tmp.file("out");
    cfg.generator.fixture = kFixtures + "/pseudo_docs.jsonl";
    cfg.dim = 64;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("sparse-only pipeline") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);

    const auto result = pipeline::run_pipeline(cfg);
    CHECK(result.total_queries == 10);
    CHECK(result.failed_queries == 0);

    // Output parses and validates under the run reader.
    const auto run = evaluation::read_run(result.run_path);
    CHECK(run.size() == result.entries.size());
    CHECK(run.front().run_tag == "mlret");

    // Synthetic scores: 10000 - rank.
    for (const auto& e : run) CHECK(e.score == 10000.0 - e.rank);

    // Queries ascend in output order.
    for (std::size_t i = 1; i < run.size(); ++i)
        CHECK(run[i - 1].query_id <= run[i].query_id);

    // Index persisted and reused: a second run loads it, byte-identical output.
    const auto first = testutil::read_file(result.run_path);
    const auto result2 = pipeline::run_pipeline(cfg);
    CHECK(testutil::read_file(result2.run_path) == first);

    // Diagnostics carry per-query true stage scores.
    const auto diag = json::parse(testutil::read_file(result.diagnostics_path));
    CHECK(diag["total_queries"] == 10);
    CHECK(diag["failed_queries"] == 0);
    REQUIRE(diag["queries"].contains("q01"));
    const auto& q01 = diag["queries"]["q01"];
    CHECK(q01["status"] == "ok");
    CHECK(q01["sparse_candidates"].get<int>() > 0);
    const auto& top = q01["scores"][0];
    CHECK(top["origin"] == "bm25");
    CHECK(top["score"].get<double>() > 0.0);
}

TEST_CASE("stale index is rejected") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);

    // Build an index over a one-doc corpus, then point the pipeline at the
    // fixture corpus with the same index path: the doc-count check must fire.
    const auto tiny = testutil::write_file(
        tmp.file("tiny.jsonl"),
        R"({"doc_id":"a","lang":"x","title":"t","body":"b","trans_title":"flood","trans_body":"river"})"
        "\n");
    auto small = cfg;
    small.corpus_path = tiny;
    pipeline::run_pipeline(small);

    CHECK_THROWS_AS(pipeline::run_pipeline(cfg), data_error);
}

TEST_CASE("expansion pipeline writes expanded queries") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);
    cfg.expansion_enabled = true;
    cfg.sparse_query_source = config::Source::expanded;

    const auto result = pipeline::run_pipeline(cfg);
    CHECK(result.failed_queries == 0);

    const auto expanded = expansion::read_expanded_queries(cfg.output_dir + "/expanded.jsonl");
    REQUIRE(expanded.size() == 10);
    for (const auto& eq : expanded) {
        CAPTURE(eq.query_id);
        CHECK(eq.expansion_terms.size() == 6);  // the six planted compound stems
    }
}

TEST_CASE("pipeline isolates per-query provider failures") {
    testutil::TempDir tmp;

    // Generator endpoint that hard-fails exactly one query.
    httplib::Server server;
    std::atomic<int> calls{0};
    server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        const auto body = json::parse(req.body);
        const auto prompt = body["prompt"].get<std::string>();
        if (prompt.find("the storm in the coast harbor") != std::string::npos) {
            res.status = 404;  // non-retryable
            return;
        }
        const auto query = expansion::parse_pseudo_doc_prompt(prompt);
        REQUIRE(query.has_value());
        res.set_content(json{{"text", *query + " sidechannel sidechannel"}}.dump(),
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto cfg = fixture_config(tmp);
    cfg.expansion_enabled = true;
    cfg.sparse_query_source = config::Source::expanded;
    cfg.use_cache = false;
    cfg.generator.kind = config::ProviderKind::http;
    cfg.generator.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/gen";

    const auto result = pipeline::run_pipeline(cfg);
    server.stop();
    listener.join();

    CHECK(result.total_queries == 10);
    CHECK(result.failed_queries == 1);
    CHECK(calls == 10);  // one call per query, no retries on 404

    // q02 is absent from the run; the other nine queries are present.
    const auto run = evaluation::read_run(result.run_path);
    std::set<std::string> qids;
    for (const auto& e : run) qids.insert(e.query_id);
    CHECK(qids.size() == 9);
    CHECK(!qids.count("q02"));

    // The failure is recorded against the query in the diagnostics.
    const auto diag = json::parse(testutil::read_file(result.diagnostics_path));
    CHECK(diag["failed_queries"] == 1);
    REQUIRE(diag["queries"].contains("q02"));
    CHECK(diag["queries"]["q02"]["status"] == "failed");
    CHECK(diag["queries"]["q02"]["error"].get<std::string>().find("404") !=
          std::string::npos);
}

TEST_CASE("ablation settings catalogue") {
    const auto& all = pipeline::ablation_settings();
    REQUIRE(all.size() == 5);
    CHECK(all[0].name == "BM25");
    CHECK(all[4].name == "JinaGRF+BM25GRF");

    CHECK(pipeline::ablation_setting("Jina+BM25").dense_enabled);
    CHECK_THROWS_WITH_AS(pipeline::ablation_setting("nope"),
                         doctest::Contains("JinaGRF+BM25GRF"), config_error);

    // apply_setting derives expansion, pins rerank off, and redirects output.
    config::PipelineConfig base;
    base.output_dir = "o";
    base.rerank_enabled = true;
    const auto applied =
        pipeline::apply_setting(base, pipeline::ablation_setting("JinaGRF+BM25"));
    CHECK(applied.dense_enabled);
    CHECK(applied.dense_query_source == config::Source::expanded);
    CHECK(applied.sparse_query_source == config::Source::base);
    CHECK(applied.expansion_enabled);
    CHECK(!applied.rerank_enabled);
    CHECK(applied.output_dir == "o/ablation/JinaGRF+BM25");
    CHECK(applied.run_tag == "JinaGRF+BM25");

    const auto bm25 = pipeline::apply_setting(base, pipeline::ablation_setting("BM25"));
    CHECK(!bm25.expansion_enabled);
    CHECK(!bm25.dense_enabled);
}

TEST_CASE("single-setting ablation equals evaluate on its run") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);

    const auto result = pipeline::run_ablation(cfg, {"BM25"});
    REQUIRE(result.rows.size() == 1);
    const auto& row = result.rows[0];
    REQUIRE(row.ok);

    const auto run = evaluation::read_run(row.run_path);
    const auto qrels = evaluation::read_qrels(cfg.qrels_path);
    const auto direct = evaluation::evaluate_run(run, qrels, cfg.k, pipeline::kOutputDepth,
                                                 evaluation::GainMode::exponential);
    CHECK(row.exponential.mean.ndcg_at_k == direct.mean.ndcg_at_k);
    CHECK(row.exponential.mean.recall_at_n == direct.mean.recall_at_n);
    CHECK(row.exponential.mean.judged_at_k == direct.mean.judged_at_k);

    // Report files exist; the JSON carries the per-setting config block.
    const auto report = json::parse(testutil::read_file(result.report_json_path));
    CHECK(report["k"] == 20);
    REQUIRE(report["settings"].size() == 1);
    const auto& entry = report["settings"][0];
    CHECK(entry["setting"] == "BM25");
    CHECK(entry["config"]["sparse_query_source"] == "base");
    CHECK(entry["config"]["dense_enabled"] == false);
    CHECK(entry["config"]["expansion_enabled"] == false);
    CHECK(entry["config"]["rerank_enabled"] == false);
    CHECK(entry["metrics"]["exponential"]["ndcg_at_k"].get<double>() ==
          row.exponential.mean.ndcg_at_k);
    CHECK(entry["metrics"]["linear"]["recall_at_n"].get<double>() ==
          row.linear.mean.recall_at_n);

    const auto table = testutil::read_file(result.report_table_path);
    CHECK(table.find("BM25") != std::string::npos);
    CHECK(table.find("R@1000") != std::string::npos);
    CHECK(table.find("nDCG@20(exp)") != std::string::npos);
}

TEST_CASE("ablation requires qrels") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);
    cfg.qrels_path.clear();
    CHECK_THROWS_AS(pipeline::run_ablation(cfg, {"BM25"}), config_error);
}

TEST_CASE("ablation reports a failed setting without aborting the rest") {
    testutil::TempDir tmp;
    auto cfg = fixture_config(tmp);
    cfg.use_cache = false;
    // Expansion-dependent settings hit a dead generator endpoint; BM25 does not.
    cfg.generator.kind = config::ProviderKind::http;
    cfg.generator.endpoint = "http://127.0.0.1:1/gen";

    const auto result = pipeline::run_ablation(cfg, {"BM25", "BM25+GRF"});
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].ok);
    CHECK(!result.rows[1].ok);
    CHECK(!result.rows[1].error.empty());

    // The table renders the failed row as missing cells plus an error note.
    const auto table = testutil::read_file(result.report_table_path);
    CHECK(table.find("BM25+GRF: ") != std::string::npos);

    const auto report = json::parse(testutil::read_file(result.report_json_path));
    REQUIRE(report["settings"].size() == 2);
    CHECK(report["settings"][0].contains("metrics"));
    CHECK(!report["settings"][1].contains("metrics"));
    CHECK(report["settings"][1].contains("error"));
}
