#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlret/cache.hpp"
#include "mlret/corpus.hpp"
#include "mlret/providers.hpp"

namespace mlret::expansion {

// Sampling parameters for pseudo-document generation, fixed for the method.
inline constexpr double kTemperature = 0.7;
inline constexpr double kTopP = 1.0;
inline constexpr int kMaxTokens = 512;

struct ExpandedQuery {
    std::string query_id;
    std::string original;
    std::vector<std::string> expansion_terms;  // stemmed forms, length <= theta
    std::string expanded_text;                 // original ++ " " ++ joined terms
};

// News-writer prompt with a {QUERY} placeholder.
const std::string& pseudo_doc_prompt_template();
std::string build_pseudo_doc_prompt(const std::string& query_text);

// Inverse of build_pseudo_doc_prompt; nullopt if the prompt does not match
// the template. Used by the stub generator to recover the query.
std::optional<std::string> parse_pseudo_doc_prompt(const std::string& prompt);

// Requests a completion for the templated prompt (temperature 0.7, top_p 1.0,
// max_tokens 512). When cache is non-null the raw completion is cached keyed
// by (provider id, prompt hash), making re-runs free and deterministic. An
// empty completion is returned as-is; the caller treats it as a degraded
// expansion (q' = q).
std::string generate_pseudo_doc(providers::TextGenerator& provider,
                                const std::string& query_text,
                                const cache::DiskCache* cache = nullptr);

// Top-theta distinct terms of preprocess(pseudo_doc) ranked by term frequency
// (ties: earlier first occurrence wins), after removing every term that
// appears in preprocess(query_text). May return fewer than theta terms.
std::vector<std::string> extract_terms(const std::string& pseudo_doc,
                                       const std::string& query_text, std::size_t theta);

// Builds the ExpandedQuery; throws data_error if terms contain duplicates or
// overlap the preprocessed query.
ExpandedQuery expand_query(const std::string& query_id, const std::string& query_text,
                           std::vector<std::string> terms);

// JSONL records: {"query_id", "original", "expansion_terms", "expanded_text"}.
void write_expanded_queries(const std::vector<ExpandedQuery>& queries, const std::string& path);
std::vector<ExpandedQuery> read_expanded_queries(const std::string& path);

// Reads either a base queries file ({"query_id","text"}) or an expanded one;
// for expanded records the search text is expanded_text.
std::vector<corpus::Query> read_queries_auto(const std::string& path);

}  // namespace mlret::expansion
