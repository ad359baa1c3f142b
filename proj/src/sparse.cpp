#include "mlret/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "mlret/errors.hpp"

namespace mlret::sparse {

namespace {

constexpr double kK1 = 1.2;
constexpr double kB = 0.75;
constexpr char kMagic[6] = {'S', 'P', 'I', 'D', 'X', '1'};
constexpr std::uint8_t kFormatVersion = 1;

double idf(std::size_t n_docs, std::size_t df) {
    return std::log((static_cast<double>(n_docs) - static_cast<double>(df) + 0.5) /
                        (static_cast<double>(df) + 0.5) +
                    1.0);
}

// Shared by bm25_score and sparse_search so both produce bit-identical sums.
double term_contribution(double idf_t, std::uint32_t tf, std::uint32_t doc_len, double avgdl) {
    const double tf_d = static_cast<double>(tf);
    return idf_t * (tf_d * (kK1 + 1.0)) /
           (tf_d + kK1 * (1.0 - kB + kB * static_cast<double>(doc_len) / avgdl));
}

struct ChunkResult {
    std::unordered_map<std::string, std::vector<Posting>> postings;
};

void index_chunk(const corpus::Corpus& corpus, std::size_t begin, std::size_t end,
                 ChunkResult& out, std::vector<std::uint32_t>& doc_len) {
    for (std::size_t pos = begin; pos < end; ++pos) {
        const auto view = corpus::translation_view(
            corpus.documents[pos], std::numeric_limits<std::size_t>::max());
        const auto tokens = textproc::preprocess(view);
        doc_len[pos] = static_cast<std::uint32_t>(tokens.size());
        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf)
            out.postings[term].push_back({static_cast<std::uint32_t>(pos), count});
    }
}

void write_varint(std::ostream& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.put(static_cast<char>((v & 0x7F) | 0x80));
        v >>= 7;
    }
    out.put(static_cast<char>(v));
}

std::uint64_t read_varint(std::istream& in) {
    std::uint64_t v = 0;
    int shift = 0;
    while (true) {
        int c = in.get();
        if (c == EOF) throw data_error("truncated index file: unexpected end of varint");
        v |= static_cast<std::uint64_t>(c & 0x7F) << shift;
        if (!(c & 0x80)) return v;
        shift += 7;
        if (shift > 63) throw data_error("corrupt index file: varint too long");
    }
}

void write_string(std::ostream& out, const std::string& s) {
    write_varint(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const auto len = read_varint(in);
    std::string s(len, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(len)))
        throw data_error("truncated index file: unexpected end of string");
    return s;
}

}  // namespace

InvertedIndex build_index(const corpus::Corpus& corpus, unsigned workers) {
    if (corpus.documents.empty()) throw data_error("cannot build index over an empty corpus");
    const std::size_t n = corpus.documents.size();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    InvertedIndex index;
    index.doc_len.assign(n, 0);
    index.doc_ids.reserve(n);
    for (const auto& doc : corpus.documents) index.doc_ids.push_back(doc.doc_id);

    std::vector<ChunkResult> chunks(workers);
    if (workers == 1) {
        index_chunk(corpus, 0, n, chunks[0], index.doc_len);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            threads.emplace_back(index_chunk, std::cref(corpus), begin, end,
                                 std::ref(chunks[w]), std::ref(index.doc_len));
        }
        for (auto& t : threads) t.join();
    }

    // Chunks cover ascending ordinal ranges, so appending per term in worker
    // order keeps every postings list sorted by doc_position.
    for (auto& chunk : chunks) {
        for (auto& [term, list] : chunk.postings) {
            auto& dst = index.postings[term];
            dst.insert(dst.end(), list.begin(), list.end());
        }
    }

    std::uint64_t total_len = 0;
    for (auto len : index.doc_len) total_len += len;
    index.avgdl = static_cast<double>(total_len) / static_cast<double>(n);
    return index;
}

double bm25_score(const InvertedIndex& index, const textproc::TokenStream& query_terms,
                  std::uint32_t doc_position) {
    const std::size_t n = index.num_docs();
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const auto& list = it->second;
        auto p = std::lower_bound(list.begin(), list.end(), doc_position,
                                  [](const Posting& a, std::uint32_t b) { return a.doc_position < b; });
        if (p == list.end() || p->doc_position != doc_position) continue;
        score += term_contribution(idf(n, list.size()), p->tf, index.doc_len[doc_position],
                                   index.avgdl);
    }
    return score;
}

std::vector<ScoredCandidate> sparse_search(const InvertedIndex& index,
                                           const textproc::TokenStream& query_terms,
                                           std::size_t top_n) {
    const std::size_t n = index.num_docs();
    std::vector<double> acc(n, 0.0);
    std::vector<std::uint32_t> touched;

    // Term-at-a-time in query-stream order: each document accumulates
    // contributions in the same order bm25_score adds them.
    for (const auto& term : query_terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double idf_t = idf(n, it->second.size());
        for (const auto& p : it->second) {
            if (acc[p.doc_position] == 0.0) touched.push_back(p.doc_position);
            acc[p.doc_position] +=
                term_contribution(idf_t, p.tf, index.doc_len[p.doc_position], index.avgdl);
        }
    }

    std::vector<std::uint32_t> matched;
    matched.reserve(touched.size());
    for (auto pos : touched)
        if (acc[pos] > 0.0) matched.push_back(pos);

    std::sort(matched.begin(), matched.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return index.doc_ids[a] < index.doc_ids[b];
    });
    if (matched.size() > top_n) matched.resize(top_n);

    std::vector<ScoredCandidate> out;
    out.reserve(matched.size());
    for (auto pos : matched) out.push_back({index.doc_ids[pos], acc[pos]});
    return out;
}

void save_index(const InvertedIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open index file for writing: " + path);

    out.write(kMagic, sizeof(kMagic));
    out.put(static_cast<char>(kFormatVersion));
    write_varint(out, index.num_docs());
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(&index.avgdl), sizeof(double));
    for (auto len : index.doc_len) write_varint(out, len);
    for (const auto& id : index.doc_ids) write_string(out, id);

    std::vector<const std::string*> terms;
    terms.reserve(index.postings.size());
    for (const auto& [term, list] : index.postings) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(),
              [](const std::string* a, const std::string* b) { return *a < *b; });

    write_varint(out, terms.size());
    for (const auto* term : terms) {
        write_string(out, *term);
        const auto& list = index.postings.at(*term);
        write_varint(out, list.size());
        std::uint32_t prev = 0;
        for (const auto& p : list) {
            write_varint(out, p.doc_position - prev);
            write_varint(out, p.tf);
            prev = p.doc_position;
        }
    }
    if (!out) throw data_error("error writing index file: " + path);
}

InvertedIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open index file: " + path);

    char magic[6];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw data_error("not an index file (bad magic): " + path);
    const int version = in.get();
    if (version != kFormatVersion)
        throw data_error("unsupported index format version " + std::to_string(version) +
                         " (expected " + std::to_string(kFormatVersion) + "): " + path);

    InvertedIndex index;
    const auto n = read_varint(in);
    if (!in.read(reinterpret_cast<char*>(&index.avgdl), sizeof(double)))
        throw data_error("truncated index file: missing avgdl");
    index.doc_len.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        index.doc_len.push_back(static_cast<std::uint32_t>(read_varint(in)));
    index.doc_ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) index.doc_ids.push_back(read_string(in));

    const auto n_terms = read_varint(in);
    index.postings.reserve(n_terms);
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        std::string term = read_string(in);
        const auto count = read_varint(in);
        std::vector<Posting> list;
        list.reserve(count);
        std::uint32_t prev = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto delta = static_cast<std::uint32_t>(read_varint(in));
            const auto tf = static_cast<std::uint32_t>(read_varint(in));
            const std::uint32_t pos = prev + delta;
            if (pos >= n) throw data_error("corrupt index file: doc_position out of range");
            list.push_back({pos, tf});
            prev = pos;
        }
        index.postings.emplace(std::move(term), std::move(list));
    }
    return index;
}

}  // namespace mlret::sparse
