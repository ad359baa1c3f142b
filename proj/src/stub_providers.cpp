#include "mlret/stub_providers.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "mlret/errors.hpp"
#include "mlret/expansion.hpp"
#include "mlret/rerank.hpp"
#include "mlret/textproc.hpp"

namespace mlret::stub {

namespace {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

StubGenerator StubGenerator::echo(std::string text) {
    StubGenerator g;
    g.echo_mode_ = true;
    g.echo_text_ = std::move(text);
    return g;
}

StubGenerator StubGenerator::from_fixture(
    const std::string& fixture_path,
    const std::unordered_map<std::string, std::string>& query_text_by_id) {
    std::ifstream in(fixture_path);
    if (!in) throw data_error("cannot open generator fixture: " + fixture_path);

    StubGenerator g;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        json rec = json::parse(raw, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("query_id") ||
            !rec.contains("pseudo_doc") || !rec["query_id"].is_string() ||
            !rec["pseudo_doc"].is_string())
            throw parse_error(fixture_path, line,
                              "expected {\"query_id\": str, \"pseudo_doc\": str}");
        const auto qid = rec["query_id"].get<std::string>();
        auto it = query_text_by_id.find(qid);
        if (it == query_text_by_id.end()) continue;  // fixture entry for an unused query
        g.by_query_text_[it->second] = rec["pseudo_doc"].get<std::string>();
    }
    return g;
}

std::string StubGenerator::generate(const providers::GenerationRequest& req) {
    if (echo_mode_) return echo_text_;
    const auto query = expansion::parse_pseudo_doc_prompt(req.prompt);
    if (!query) return req.prompt;  // not an expansion prompt: plain echo
    auto it = by_query_text_.find(*query);
    if (it != by_query_text_.end()) return it->second;
    return *query;
}

StubEmbedder StubEmbedder::fixed(std::vector<double> vector) {
    StubEmbedder e;
    e.fixed_mode_ = true;
    e.fixed_vector_ = std::move(vector);
    return e;
}

std::vector<double> StubEmbedder::embed_one(const std::string& text, std::size_t dim) {
    std::vector<double> vec(dim, 0.0);
    // Ordered map so the floating-point accumulation order below is a pure
    // function of the text, not of hash-table layout.
    std::map<std::string, int> features;

    std::string token;
    const auto flush = [&] {
        if (token.empty()) return;
        if (token.size() <= 4) {
            ++features[token];
        } else {
            for (std::size_t i = 0; i + 4 <= token.size(); ++i)
                ++features[token.substr(i, 4)];
        }
        token.clear();
    };
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        const bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (alnum || static_cast<unsigned char>(c) >= 0x80) token.push_back(c);
        else flush();
    }
    flush();

    for (const auto& [feature, count] : features) {
        const std::uint64_t h = fnv1a64(feature);
        const std::size_t idx = h % dim;
        const double sign = (h >> 63) ? -1.0 : 1.0;
        vec[idx] += sign * std::sqrt(static_cast<double>(count));
    }
    return vec;
}

std::vector<std::vector<double>> StubEmbedder::embed(const std::vector<std::string>& texts,
                                                     const std::string& role, std::size_t dim) {
    (void)role;
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        if (fixed_mode_) out.push_back(fixed_vector_);
        else out.push_back(embed_one(text, dim));
    }
    return out;
}

StubScorer StubScorer::fixed(double yes_logit, double no_logit) {
    StubScorer s;
    s.fixed_mode_ = true;
    s.fixed_logits_ = {yes_logit, no_logit};
    return s;
}

providers::LabelLogits StubScorer::score(const std::string& prompt) {
    if (fixed_mode_) return fixed_logits_;
    const auto parts = rerank::parse_reranker_prompt(prompt);
    if (!parts) return {0.0, 0.0};

    const auto query_terms = textproc::preprocess(parts->query);
    const auto doc_terms = textproc::preprocess(parts->doc);
    const std::unordered_set<std::string> doc_set(doc_terms.begin(), doc_terms.end());
    std::unordered_set<std::string> seen;
    double present = 0.0, absent = 0.0;
    for (const auto& t : query_terms) {
        if (!seen.insert(t).second) continue;
        if (doc_set.count(t)) present += 1.0;
        else absent += 1.0;
    }
    return {present, absent};
}

}  // namespace mlret::stub
