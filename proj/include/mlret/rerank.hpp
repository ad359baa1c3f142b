#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlret/cache.hpp"
#include "mlret/dense.hpp"
#include "mlret/providers.hpp"

namespace mlret::rerank {

enum class Origin { reranked, dense };

struct MergedEntry {
    std::string doc_id;
    double score;  // rerank probability for head entries, cosine for the tail
    Origin origin;
};

struct MergedRankedList {
    std::string query_id;
    std::vector<MergedEntry> entries;
};

// Relevance-judge prompt with {QUERY} and {DOC} placeholders.
const std::string& reranker_prompt_template();
std::string build_reranker_prompt(const std::string& query_text, const std::string& doc_text);

struct RerankerPromptParts {
    std::string query;
    std::string doc;
};

// Inverse of build_reranker_prompt; nullopt if the prompt does not match the
// template. Used by the stub scorer to recover the pair.
std::optional<RerankerPromptParts> parse_reranker_prompt(const std::string& prompt);

// Numerically stable two-way softmax: with m = max(yes, no),
//   p = exp(yes - m) / (exp(yes - m) + exp(no - m)).
double softmax_yes(double yes_logit, double no_logit);

// Builds the reranker prompt, obtains the yes/no logits (cached keyed by
// provider id and prompt hash when cache is non-null), and returns the
// softmax probability of "yes". Throws provider_error on non-finite logits.
// The logits are also returned through *logits_out when non-null, for
// diagnostics.
double score_pair(providers::LogitProvider& provider, const std::string& query_text,
                  const std::string& doc_text, const cache::DiskCache* cache = nullptr,
                  providers::LabelLogits* logits_out = nullptr);

// Head: the first min(k, |dense_list|) entries re-sorted by probability
// descending (doc_id ascending on ties), origin=reranked. Tail: the remaining
// entries in their exact dense order, origin=dense. `scores` must cover
// exactly the head doc_ids; anything missing or extra is a data_error.
MergedRankedList rerank_merge(const dense::DenseRankedList& dense_list,
                              const std::unordered_map<std::string, double>& scores,
                              std::size_t k);

}  // namespace mlret::rerank
