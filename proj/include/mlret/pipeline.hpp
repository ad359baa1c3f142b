#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mlret/config.hpp"
#include "mlret/evaluation.hpp"
#include "mlret/providers.hpp"

namespace mlret::pipeline {

// Every run file emitted by this project carries synthetic strictly
// decreasing scores so rank order is unambiguous even when true stage scores
// tie or mix scales (rerank probabilities vs. cosines); the true scores per
// entry are preserved in the diagnostics sidecar.
inline constexpr double kSyntheticScoreBase = 10000.0;
inline double synthetic_score(int rank) { return kSyntheticScoreBase - rank; }

// Official output shape: at most this many results per query.
inline constexpr std::size_t kOutputDepth = 1000;

struct PipelineResult {
    std::vector<evaluation::RunEntry> entries;
    std::size_t total_queries = 0;
    std::size_t failed_queries = 0;
    std::string run_path;
    std::string diagnostics_path;
};

// Runs the configured stages over every query and writes
//   <output_dir>/run.trec           the TREC run (<= 1000 entries per query)
//   <output_dir>/diagnostics.json   per-query true scores, counts, failures
//   <output_dir>/expanded.jsonl     ExpandedQuery records (expansion only)
// Queries are processed by a worker pool and assembled in ascending
// query_id order. A hard error in any stage fails only that query; the
// failure is recorded in the diagnostics. Throws only for whole-run
// problems (unreadable corpus, bad config, unwritable output).
PipelineResult run_pipeline(const config::PipelineConfig& cfg);

// One Table-2-style ablation row. The five settings vary exactly
// {sparse_query_source, dense_enabled, dense_query_source}; the expansion
// stage is derived (enabled iff either source is "expanded") and rerank is
// pinned off.
struct AblationSetting {
    std::string name;
    config::Source sparse_query_source = config::Source::base;
    bool dense_enabled = false;
    config::Source dense_query_source = config::Source::base;
};

// The five canonical settings, in report order.
const std::vector<AblationSetting>& ablation_settings();

// Lookup by name; throws config_error listing the valid names.
const AblationSetting& ablation_setting(const std::string& name);

// Applies a setting to a base config (stages, sources, derived expansion,
// rerank off) and redirects outputs to <output_dir>/ablation/<name>.
config::PipelineConfig apply_setting(config::PipelineConfig base, const AblationSetting& s);

struct AblationRow {
    AblationSetting setting;
    bool ok = false;
    std::string error;  // when !ok
    evaluation::MetricReport exponential;
    evaluation::MetricReport linear;
    std::string run_path;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    std::string report_json_path;
    std::string report_table_path;
};

// Runs each named setting ("all" = the five canonical ones), evaluates
// R@1000 and nDCG@20 in both gain modes, and writes
//   <output_dir>/ablation/report.json and report.txt
// Per-setting failures are reported as missing cells, not thrown.
AblationResult run_ablation(const config::PipelineConfig& base,
                            const std::vector<std::string>& setting_names);

}  // namespace mlret::pipeline
