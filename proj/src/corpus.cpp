#include "mlret/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "mlret/errors.hpp"
#include "mlret/unicode.hpp"

namespace mlret::corpus {

namespace {

using nlohmann::json;

std::string require_string(const json& rec, const char* key, const std::string& path,
                           std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end())
        throw parse_error(path, line, std::string("missing field \"") + key + "\"");
    if (!it->is_string())
        throw parse_error(path, line, std::string("field \"") + key + "\" is not a string");
    return unicode::nfc(it->get<std::string>());
}

json parse_record(const std::string& raw, const std::string& path, std::size_t line) {
    json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded()) throw parse_error(path, line, "invalid JSON");
    if (!rec.is_object()) throw parse_error(path, line, "record is not a JSON object");
    return rec;
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                            c == '\f' || c == '\v'; }

}  // namespace

Corpus ingest_corpus(const std::string& path, CorpusFormat format) {
    (void)format;  // only CorpusFormat::jsonl exists
    std::ifstream in(path);
    if (!in) throw data_error("cannot open corpus file: " + path);

    Corpus corpus;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;

        json rec = parse_record(raw, path, line);
        Document doc;
        doc.doc_id = require_string(rec, "doc_id", path, line);
        doc.lang = require_string(rec, "lang", path, line);
        doc.title = require_string(rec, "title", path, line);
        doc.body = require_string(rec, "body", path, line);
        doc.trans_title = require_string(rec, "trans_title", path, line);
        doc.trans_body = require_string(rec, "trans_body", path, line);

        if (doc.doc_id.empty()) throw parse_error(path, line, "empty doc_id");
        if (doc.trans_title.empty() && doc.trans_body.empty())
            throw data_error("document \"" + doc.doc_id +
                             "\" has no translation text (both fields empty)");
        if (!corpus.id_index.emplace(doc.doc_id, corpus.documents.size()).second)
            throw data_error("duplicate doc_id \"" + doc.doc_id + "\"");
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open corpus file for writing: " + path);
    for (const auto& doc : corpus.documents) {
        json rec = {{"doc_id", doc.doc_id},       {"lang", doc.lang},
                    {"title", doc.title},         {"body", doc.body},
                    {"trans_title", doc.trans_title}, {"trans_body", doc.trans_body}};
        out << rec.dump() << '\n';
    }
    if (!out) throw data_error("error writing corpus file: " + path);
}

std::string translation_view(const Document& doc, std::size_t max_units) {
    if (max_units == 0) return "";
    std::string joined;
    if (!doc.trans_title.empty()) joined = doc.trans_title;
    if (!doc.trans_body.empty()) {
        if (!joined.empty()) joined += '\n';
        joined += doc.trans_body;
    }

    // Walk whitespace-delimited tokens; cut after the max_units-th so the
    // original separators between surviving tokens stay intact.
    std::size_t units = 0;
    std::size_t i = 0;
    while (i < joined.size()) {
        while (i < joined.size() && is_ws(joined[i])) ++i;
        if (i >= joined.size()) break;
        if (units == max_units) return joined.substr(0, joined.find_last_not_of(" \t\n\r\f\v", i - 1) + 1);
        while (i < joined.size() && !is_ws(joined[i])) ++i;
        ++units;
    }
    return joined;
}

std::vector<Query> read_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open queries file: " + path);

    std::vector<Query> queries;
    std::unordered_map<std::string, std::size_t> seen;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;

        json rec = parse_record(raw, path, line);
        Query q;
        q.query_id = require_string(rec, "query_id", path, line);
        q.text = require_string(rec, "text", path, line);
        if (q.query_id.empty()) throw parse_error(path, line, "empty query_id");
        if (!seen.emplace(q.query_id, line).second)
            throw data_error("duplicate query_id \"" + q.query_id + "\"");
        queries.push_back(std::move(q));
    }
    return queries;
}

}  // namespace mlret::corpus
