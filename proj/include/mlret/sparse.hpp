#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlret/corpus.hpp"
#include "mlret/textproc.hpp"

namespace mlret::sparse {

struct Posting {
    std::uint32_t doc_position;  // ordinal into doc_ids / doc_len
    std::uint32_t tf;
    bool operator==(const Posting&) const = default;
};

// Term -> postings (sorted by doc_position) plus the collection statistics
// BM25 needs. Immutable once built; safe for concurrent searches.
struct InvertedIndex {
    std::unordered_map<std::string, std::vector<Posting>> postings;
    std::vector<std::uint32_t> doc_len;  // preprocessed token count per doc
    std::vector<std::string> doc_ids;    // ordinal -> doc_id
    double avgdl = 0.0;

    std::size_t num_docs() const { return doc_len.size(); }
};

struct ScoredCandidate {
    std::string doc_id;
    double score;
};

// Preprocesses every document's untruncated translation view and builds the
// index. Documents may be partitioned across `workers` threads in contiguous
// ordinal chunks; the merged result is identical for any worker count.
// Throws data_error on an empty corpus.
InvertedIndex build_index(const corpus::Corpus& corpus, unsigned workers = 1);

// Robertson BM25 with k1 = 1.2, b = 0.75 and +1-smoothed IDF:
//   IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1)
//   score  = sum_t IDF(t) * tf*(k1+1) / (tf + k1*(1 - b + b*doc_len/avgdl))
// Query terms are taken as a stream: each occurrence contributes once, in
// stream order (so additions happen in the same order as sparse_search).
double bm25_score(const InvertedIndex& index, const textproc::TokenStream& query_terms,
                  std::uint32_t doc_position);

// Top-n candidates by BM25, score descending, doc_id ascending on ties. Only
// documents sharing at least one term with the query (score > 0) appear.
std::vector<ScoredCandidate> sparse_search(const InvertedIndex& index,
                                           const textproc::TokenStream& query_terms,
                                           std::size_t top_n);

// Binary index file, little-endian, varint = unsigned LEB128:
//   magic "SPIDX1" (6 bytes), format version byte (currently 1),
//   varint N, float64 avgdl,
//   N x varint doc_len,
//   N x (varint byte-length, bytes) doc_id,
//   varint term count, then per term in lexicographic byte order:
//     (varint byte-length, bytes) term, varint postings count,
//     postings as (varint doc_position delta, varint tf) with the first
//     posting's delta relative to zero.
// Lexicographic term order makes the bytes independent of build worker count.
void save_index(const InvertedIndex& index, const std::string& path);

// Throws data_error on bad magic, unsupported version, or truncated data.
InvertedIndex load_index(const std::string& path);

}  // namespace mlret::sparse
