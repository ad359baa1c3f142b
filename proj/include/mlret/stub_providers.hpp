#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "mlret/providers.hpp"

namespace mlret::stub {

// Deterministic local text generator. In fixture mode it recovers the query
// from the expansion prompt and looks up a canned pseudo-document; queries
// without a fixture entry fall back to echoing the query itself (which the
// term filter then removes entirely — a graceful degradation to q' = q). In
// echo mode it returns one configured string for every prompt. Prompts that
// are not expansion prompts are echoed back verbatim.
class StubGenerator : public providers::TextGenerator {
public:
    static StubGenerator echo(std::string text);
    // fixture_path: JSONL {"query_id": str, "pseudo_doc": str}; queries maps
    // each query_id to its text (the form recoverable from the prompt).
    static StubGenerator from_fixture(const std::string& fixture_path,
                                      const std::unordered_map<std::string, std::string>&
                                          query_text_by_id);

    const std::string& id() const override { return id_; }
    std::string generate(const providers::GenerationRequest& req) override;

private:
    std::string id_ = "stub-generator";
    bool echo_mode_ = false;
    std::string echo_text_;
    std::unordered_map<std::string, std::string> by_query_text_;
};

// Deterministic hashed bag-of-character-4-grams embedder. Tokenizes on
// ASCII non-alphanumerics (lowercased), hashes each token's 4-grams (or the
// whole token when shorter) with FNV-1a into a signed position, and damps
// counts with a square root. Shared subwords give related words correlated
// vectors, which is all the tests need from an embedding space. The role tag
// is ignored, as a symmetric encoder would.
class StubEmbedder : public providers::Embedder {
public:
    StubEmbedder() = default;
    // Returns the same raw vector for every text (for contract tests).
    static StubEmbedder fixed(std::vector<double> vector);

    const std::string& id() const override { return id_; }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const std::string& role, std::size_t dim) override;

    // Raw (un-normalized) vector for one text; exposed for tests.
    static std::vector<double> embed_one(const std::string& text, std::size_t dim);

private:
    std::string id_ = "stub-embedder";
    bool fixed_mode_ = false;
    std::vector<double> fixed_vector_;
};

// Deterministic logit provider. In overlap mode it parses the reranker
// prompt and scores by preprocessed-term overlap: yes = number of distinct
// query terms present in the document, no = number absent. In fixed mode it
// returns configured logits for every prompt.
class StubScorer : public providers::LogitProvider {
public:
    StubScorer() = default;
    static StubScorer fixed(double yes_logit, double no_logit);

    const std::string& id() const override { return id_; }
    providers::LabelLogits score(const std::string& prompt) override;

private:
    std::string id_ = "stub-scorer";
    bool fixed_mode_ = false;
    providers::LabelLogits fixed_logits_{0.0, 0.0};
};

}  // namespace mlret::stub
