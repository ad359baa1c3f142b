#pragma once

#include <string>
#include <vector>

#include "mlret/cache.hpp"
#include "mlret/providers.hpp"

namespace mlret::dense {

using Vector = std::vector<double>;

struct DenseEntry {
    std::string doc_id;
    double similarity;
};

struct DenseRankedList {
    std::string query_id;
    std::vector<DenseEntry> entries;  // similarity non-increasing, doc_id tie-break
};

// Truncates a raw provider vector to dim and L2-normalizes it. Throws
// provider_error if the vector is shorter than dim, contains a non-finite
// value, or is all-zero after truncation.
Vector normalize(Vector raw, std::size_t dim);

// Embeds one text in role "query" or "document": provider vector, truncated
// to dim, L2-normalized. When cache is non-null the normalized vector is
// cached keyed by (provider id, role, text hash, dim).
Vector embed(providers::Embedder& provider, const std::string& text, const std::string& role,
             std::size_t dim, const cache::DiskCache* cache = nullptr);

// Batch variant: cache lookups first, then one provider call for the misses
// (order-preserving). Returns one normalized vector per input text.
std::vector<Vector> embed_batch(providers::Embedder& provider,
                                const std::vector<std::string>& texts, const std::string& role,
                                std::size_t dim, const cache::DiskCache* cache = nullptr);

// Dot product of two normalized vectors, clamped to [-1, 1]. Throws on dim
// mismatch.
double cosine(const Vector& u, const Vector& v);

// Sorts candidates by cosine to query_vec descending (doc_id ascending on
// ties) and truncates to cutoff.
DenseRankedList dense_rank(const std::string& query_id, const Vector& query_vec,
                           const std::vector<std::pair<std::string, Vector>>& candidates,
                           std::size_t cutoff);

}  // namespace mlret::dense
