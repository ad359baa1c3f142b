#include "mlret/dense.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mlret/errors.hpp"

namespace mlret::dense {

namespace {

using nlohmann::json;

std::string vector_cache_key(const std::string& provider_id, const std::string& role,
                             const std::string& text, std::size_t dim) {
    return cache::sha256_hex("embed\x1f" + provider_id + '\x1f' + role + '\x1f' +
                             cache::sha256_hex(text) + '\x1f' + std::to_string(dim));
}

}  // namespace

Vector normalize(Vector raw, std::size_t dim) {
    if (raw.size() < dim)
        throw provider_error("embedding has dimension " + std::to_string(raw.size()) +
                                 ", expected at least " + std::to_string(dim),
                             /*retryable=*/false);
    raw.resize(dim);

    double sq = 0.0;
    for (double x : raw) {
        if (!std::isfinite(x))
            throw provider_error("embedding contains a non-finite value", /*retryable=*/false);
        sq += x * x;
    }
    if (sq == 0.0)
        throw provider_error("embedding is all-zero", /*retryable=*/false);

    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : raw) x *= inv;
    return raw;
}

Vector embed(providers::Embedder& provider, const std::string& text, const std::string& role,
             std::size_t dim, const cache::DiskCache* cache) {
    auto vectors = embed_batch(provider, {text}, role, dim, cache);
    return std::move(vectors.front());
}

std::vector<Vector> embed_batch(providers::Embedder& provider,
                                const std::vector<std::string>& texts, const std::string& role,
                                std::size_t dim, const cache::DiskCache* cache) {
    std::vector<Vector> out(texts.size());
    std::vector<std::size_t> miss_positions;
    std::vector<std::string> miss_texts;
    std::vector<std::string> keys(texts.size());

    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache) {
            keys[i] = vector_cache_key(provider.id(), role, texts[i], dim);
            if (auto hit = cache->get(keys[i])) {
                json vec = json::parse(*hit);
                out[i] = vec.get<Vector>();
                continue;
            }
        }
        miss_positions.push_back(i);
        miss_texts.push_back(texts[i]);
    }

    if (!miss_texts.empty()) {
        auto raw = provider.embed(miss_texts, role, dim);
        if (raw.size() != miss_texts.size())
            throw provider_error(provider.id() + ": returned " + std::to_string(raw.size()) +
                                     " vectors for " + std::to_string(miss_texts.size()) +
                                     " texts",
                                 /*retryable=*/false);
        for (std::size_t j = 0; j < miss_positions.size(); ++j) {
            const std::size_t i = miss_positions[j];
            out[i] = normalize(std::move(raw[j]), dim);
            if (cache) cache->put(keys[i], json(out[i]).dump());
        }
    }
    return out;
}

double cosine(const Vector& u, const Vector& v) {
    if (u.size() != v.size())
        throw data_error("cosine dimension mismatch: " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return std::clamp(dot, -1.0, 1.0);
}

DenseRankedList dense_rank(const std::string& query_id, const Vector& query_vec,
                           const std::vector<std::pair<std::string, Vector>>& candidates,
                           std::size_t cutoff) {
    DenseRankedList list;
    list.query_id = query_id;
    list.entries.reserve(candidates.size());
    for (const auto& [doc_id, vec] : candidates)
        list.entries.push_back({doc_id, cosine(query_vec, vec)});

    std::sort(list.entries.begin(), list.entries.end(),
              [](const DenseEntry& a, const DenseEntry& b) {
                  if (a.similarity != b.similarity) return a.similarity > b.similarity;
                  return a.doc_id < b.doc_id;
              });
    if (list.entries.size() > cutoff) list.entries.resize(cutoff);
    return list;
}

}  // namespace mlret::dense
