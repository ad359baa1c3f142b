#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace mlret::evaluation {

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    int rank = 0;  // 1-based, contiguous within a query
    double score = 0.0;
    std::string run_tag;
};

// Graded judgments: (query_id, doc_id) -> grade >= 0.
struct Qrels {
    std::unordered_map<std::string, std::unordered_map<std::string, int>> by_query;

    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool judged(const std::string& query_id, const std::string& doc_id) const;
};

enum class GainMode { exponential, linear };

struct QueryMetrics {
    double ndcg_at_k = 0.0;
    double judged_at_k = 0.0;
    double recall_at_n = 0.0;
};

struct MetricReport {
    std::map<std::string, QueryMetrics> per_query;  // evaluated queries only
    std::vector<std::string> skipped;               // queries with no positive grade
    QueryMetrics mean;
    std::size_t k = 0;
    std::size_t n = 0;
    GainMode gain_mode = GainMode::exponential;
};

// TREC run lines: "qid Q0 docid rank score tag". read_run validates six
// fields per line, contiguous 1..n ranks per query, non-increasing scores,
// and no duplicate doc per query; violations name the offending line.
std::vector<RunEntry> read_run(const std::string& path);
void write_run(const std::vector<RunEntry>& entries, const std::string& path);

// Canonical score formatting used by write_run: integral values without a
// decimal point, anything else in shortest round-trip form.
std::string format_score(double score);

// Qrels lines: "qid 0 docid grade"; duplicate (qid, docid) is an error.
Qrels read_qrels(const std::string& path);
void write_qrels(const Qrels& qrels, const std::string& path);

// Per-query metrics over one query's run entries (rank order, best first).
// ndcg: gain g(r) = 2^r - 1 (exponential) or r (linear), discount log2(i+1),
// normalized by the ideal DCG from the qrels grades. judged: fraction of the
// top-min(k, n) entries judged at any grade. recall: relevant docs retrieved
// in the top n over relevant docs in qrels.
double ndcg_at_k(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t k,
                 GainMode gain_mode);
double judged_at_k(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t k);
double recall_at_n(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t n);

// Evaluates a whole run. Queries without a positive grade in qrels are
// skipped and listed, never averaged. Means are arithmetic over evaluated
// queries.
MetricReport evaluate_run(const std::vector<RunEntry>& run, const Qrels& qrels, std::size_t k,
                          std::size_t n, GainMode gain_mode);

// Report serialization: JSON object (always includes per-query values) and
// an aligned plain-text table (per-query rows optional).
std::string report_to_json(const MetricReport& report);
std::string report_to_table(const MetricReport& report, bool per_query);

}  // namespace mlret::evaluation
