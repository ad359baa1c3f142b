#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mlret::corpus {

// One collection record: the original multilingual document plus its English
// translation view. Only trans_title/trans_body are ever scored; title/body
// are carried for provenance.
struct Document {
    std::string doc_id;
    std::string lang;
    std::string title;
    std::string body;
    std::string trans_title;
    std::string trans_body;
};

struct Corpus {
    std::vector<Document> documents;                     // ingestion order
    std::unordered_map<std::string, std::size_t> id_index;  // doc_id -> position

    std::size_t size() const { return documents.size(); }
    const Document* find(const std::string& doc_id) const {
        auto it = id_index.find(doc_id);
        return it == id_index.end() ? nullptr : &documents[it->second];
    }
};

struct Query {
    std::string query_id;
    std::string text;
};

enum class CorpusFormat { jsonl };

// Reads a JSONL corpus file, one document per line:
//   {"doc_id": str, "lang": str, "title": str, "body": str,
//    "trans_title": str, "trans_body": str}
// All string fields are NFC-normalized on read. Throws parse_error (with the
// line number) for malformed records and data_error for duplicate doc_ids or
// records whose translation fields are both empty.
Corpus ingest_corpus(const std::string& path, CorpusFormat format = CorpusFormat::jsonl);

// Re-serializes a corpus to JSONL in iteration order; inverse of
// ingest_corpus up to container whitespace.
void write_corpus(const Corpus& corpus, const std::string& path);

// trans_title, a single newline, then trans_body, truncated to at most
// max_units whitespace-delimited tokens. Separators between surviving tokens
// are preserved; empty fields contribute nothing (no dangling newline).
std::string translation_view(const Document& doc, std::size_t max_units);

// Reads a JSONL queries file: {"query_id": str, "text": str}. Text is
// NFC-normalized; duplicate query_ids are rejected.
std::vector<Query> read_queries(const std::string& path);

}  // namespace mlret::corpus
