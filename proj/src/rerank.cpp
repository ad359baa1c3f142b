#include "mlret/rerank.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mlret/errors.hpp"

namespace mlret::rerank {

namespace {

using nlohmann::json;

constexpr std::string_view kPromptPrefix =
    "You are a search relevance judge. Given an instruction, a query, and a candidate news "
    "document, decide whether the document satisfies the instruction and is relevant to the "
    "query.\n"
    "Answer with only one token: yes or no.\n"
    "\n"
    "Instruct: Given a news search query, retrieve relevant news articles that answer the "
    "query.\n"
    "\n"
    "Query: ";
constexpr std::string_view kPromptMiddle =
    "\n"
    "\n"
    "Document: ";
constexpr std::string_view kPromptSuffix =
    "\n"
    "\n"
    "Answer:";

}  // namespace

const std::string& reranker_prompt_template() {
    static const std::string tmpl = std::string(kPromptPrefix) + "{QUERY}" +
                                    std::string(kPromptMiddle) + "{DOC}" +
                                    std::string(kPromptSuffix);
    return tmpl;
}

std::string build_reranker_prompt(const std::string& query_text, const std::string& doc_text) {
    std::string prompt(kPromptPrefix);
    prompt += query_text;
    prompt += kPromptMiddle;
    prompt += doc_text;
    prompt += kPromptSuffix;
    return prompt;
}

std::optional<RerankerPromptParts> parse_reranker_prompt(const std::string& prompt) {
    if (prompt.size() < kPromptPrefix.size() + kPromptMiddle.size() + kPromptSuffix.size())
        return std::nullopt;
    if (prompt.compare(0, kPromptPrefix.size(), kPromptPrefix) != 0) return std::nullopt;
    if (prompt.compare(prompt.size() - kPromptSuffix.size(), kPromptSuffix.size(),
                       kPromptSuffix) != 0)
        return std::nullopt;
    // The query never contains kPromptMiddle's "\n\nDocument: " marker in
    // practice; take its first occurrence as the separator.
    const auto mid = prompt.find(kPromptMiddle, kPromptPrefix.size());
    if (mid == std::string::npos || mid + kPromptMiddle.size() > prompt.size() - kPromptSuffix.size())
        return std::nullopt;
    RerankerPromptParts parts;
    parts.query = prompt.substr(kPromptPrefix.size(), mid - kPromptPrefix.size());
    parts.doc = prompt.substr(mid + kPromptMiddle.size(),
                              prompt.size() - kPromptSuffix.size() - mid - kPromptMiddle.size());
    return parts;
}

double softmax_yes(double yes_logit, double no_logit) {
    const double m = std::max(yes_logit, no_logit);
    const double ey = std::exp(yes_logit - m);
    const double en = std::exp(no_logit - m);
    return ey / (ey + en);
}

double score_pair(providers::LogitProvider& provider, const std::string& query_text,
                  const std::string& doc_text, const cache::DiskCache* cache,
                  providers::LabelLogits* logits_out) {
    const std::string prompt = build_reranker_prompt(query_text, doc_text);

    providers::LabelLogits logits{};
    bool have_logits = false;
    std::string key;
    if (cache) {
        key = cache::sha256_hex("rerank\x1f" + provider.id() + '\x1f' +
                                cache::sha256_hex(prompt));
        if (auto hit = cache->get(key)) {
            const json rec = json::parse(*hit);
            logits = {rec.at("yes_logit").get<double>(), rec.at("no_logit").get<double>()};
            have_logits = true;
        }
    }
    if (!have_logits) {
        logits = provider.score(prompt);
        if (!std::isfinite(logits.yes_logit) || !std::isfinite(logits.no_logit))
            throw provider_error(provider.id() + ": non-finite logits", /*retryable=*/false);
        if (cache)
            cache->put(key, json{{"yes_logit", logits.yes_logit},
                                 {"no_logit", logits.no_logit}}
                                .dump());
    }

    if (logits_out) *logits_out = logits;
    return softmax_yes(logits.yes_logit, logits.no_logit);
}

MergedRankedList rerank_merge(const dense::DenseRankedList& dense_list,
                              const std::unordered_map<std::string, double>& scores,
                              std::size_t k) {
    const std::size_t head_len = std::min(k, dense_list.entries.size());

    for (std::size_t i = 0; i < head_len; ++i)
        if (!scores.count(dense_list.entries[i].doc_id))
            throw data_error("rerank scores missing top-k doc \"" +
                             dense_list.entries[i].doc_id + "\"");
    if (scores.size() != head_len)
        throw data_error("rerank scores cover " + std::to_string(scores.size()) +
                         " docs, expected exactly the top " + std::to_string(head_len));

    MergedRankedList merged;
    merged.query_id = dense_list.query_id;
    merged.entries.reserve(dense_list.entries.size());
    for (std::size_t i = 0; i < head_len; ++i) {
        const auto& doc_id = dense_list.entries[i].doc_id;
        merged.entries.push_back({doc_id, scores.at(doc_id), Origin::reranked});
    }
    std::sort(merged.entries.begin(), merged.entries.end(),
              [](const MergedEntry& a, const MergedEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.doc_id < b.doc_id;
              });
    for (std::size_t i = head_len; i < dense_list.entries.size(); ++i)
        merged.entries.push_back(
            {dense_list.entries[i].doc_id, dense_list.entries[i].similarity, Origin::dense});
    return merged;
}

}  // namespace mlret::rerank
