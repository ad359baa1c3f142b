#pragma once

#include <cstdint>
#include <string>

namespace mlret::config {

enum class Source { base, expanded };

const char* source_name(Source s);
Source parse_source(const std::string& name);  // throws config_error

enum class ProviderKind { stub, http };

struct ProviderConfig {
    ProviderKind kind = ProviderKind::stub;
    std::string endpoint;        // http: full URL
    std::string credential_env;  // http: env var holding the bearer token
    std::string fixture;         // stub generator: pseudo-doc fixture JSONL
    std::string echo;            // stub generator: fixed completion text
};

// Everything the pipeline needs, loaded from a TOML-style config file. The
// recognized keys are listed next to load_config below; unknown keys are
// rejected so typos fail loudly.
struct PipelineConfig {
    std::string corpus_path;
    std::string queries_path;
    std::string qrels_path;
    std::string index_path;
    std::string cache_dir;
    std::string output_dir;

    bool expansion_enabled = false;
    bool dense_enabled = false;
    bool rerank_enabled = false;
    Source sparse_query_source = Source::base;
    Source dense_query_source = Source::base;
    Source rerank_query_source = Source::base;

    std::size_t theta = 30;
    std::size_t sparse_top_n = 2000;
    std::size_t dense_cutoff = 1000;
    std::size_t k = 20;
    std::size_t dim = 1024;
    std::size_t max_units = 5120;
    unsigned workers = 1;
    bool use_cache = true;
    std::string run_tag = "mlret";

    ProviderConfig generator;
    ProviderConfig embedder;
    ProviderConfig scorer;
};

// Parses a small TOML subset: [section] / [section.sub] headers, key = value
// pairs with string ("..." with \\ \" \n \t escapes), integer, float, or
// boolean values, and # comments. Paths are taken as written (relative paths
// resolve against the working directory).
//
// Recognized keys:
//   run_tag
//   [paths]     corpus queries qrels index cache_dir output_dir
//   [stages]    expansion dense rerank
//   [sources]   sparse_query dense_query rerank_query   ("base"|"expanded")
//   [knobs]     theta sparse_top_n dense_cutoff k dim max_units workers
//               use_cache
//   [providers.generator|embedder|scorer]
//               kind ("stub"|"http") endpoint credential_env fixture echo
PipelineConfig load_config(const std::string& path);

// Invariant checks (throws config_error): rerank requires dense; expanded
// query sources require the expansion stage; knobs positive; http providers
// for enabled stages need an endpoint; required paths non-empty.
void validate(const PipelineConfig& cfg);

}  // namespace mlret::config
