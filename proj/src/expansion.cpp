#include "mlret/expansion.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mlret/errors.hpp"
#include "mlret/textproc.hpp"
#include "mlret/unicode.hpp"

namespace mlret::expansion {

namespace {

using nlohmann::json;

constexpr std::string_view kPromptPrefix =
    "You are a professional news writer.\n"
    "Based on the query, write a short, factual news-style article (3–6 paragraphs).\n"
    "\n"
    "Query: ";
constexpr std::string_view kPromptSuffix =
    "\n"
    "\n"
    "Write the article:";

}  // namespace

const std::string& pseudo_doc_prompt_template() {
    static const std::string tmpl =
        std::string(kPromptPrefix) + "{QUERY}" + std::string(kPromptSuffix);
    return tmpl;
}

std::string build_pseudo_doc_prompt(const std::string& query_text) {
    std::string prompt(kPromptPrefix);
    prompt += query_text;
    prompt += kPromptSuffix;
    return prompt;
}

std::optional<std::string> parse_pseudo_doc_prompt(const std::string& prompt) {
    if (prompt.size() < kPromptPrefix.size() + kPromptSuffix.size()) return std::nullopt;
    if (prompt.compare(0, kPromptPrefix.size(), kPromptPrefix) != 0) return std::nullopt;
    if (prompt.compare(prompt.size() - kPromptSuffix.size(), kPromptSuffix.size(),
                       kPromptSuffix) != 0)
        return std::nullopt;
    return prompt.substr(kPromptPrefix.size(),
                         prompt.size() - kPromptPrefix.size() - kPromptSuffix.size());
}

std::string generate_pseudo_doc(providers::TextGenerator& provider,
                                const std::string& query_text, const cache::DiskCache* cache) {
    const std::string prompt = build_pseudo_doc_prompt(query_text);
    std::string key;
    if (cache) {
        key = cache::sha256_hex("pseudo-doc\x1f" + provider.id() + '\x1f' +
                                cache::sha256_hex(prompt));
        if (auto hit = cache->get(key)) return std::move(*hit);
    }

    providers::GenerationRequest req;
    req.prompt = prompt;
    req.temperature = kTemperature;
    req.top_p = kTopP;
    req.max_tokens = kMaxTokens;
    std::string completion = provider.generate(req);

    if (cache) cache->put(key, completion);
    return completion;
}

std::vector<std::string> extract_terms(const std::string& pseudo_doc,
                                       const std::string& query_text, std::size_t theta) {
    const auto doc_tokens = textproc::preprocess(pseudo_doc);
    const auto query_tokens = textproc::preprocess(query_text);
    const std::unordered_set<std::string> query_set(query_tokens.begin(), query_tokens.end());

    struct TermStat {
        std::string term;
        int tf = 0;
        std::size_t first_pos = 0;
    };
    std::vector<TermStat> stats;
    std::unordered_map<std::string, std::size_t> seen;  // term -> stats position
    for (std::size_t i = 0; i < doc_tokens.size(); ++i) {
        const auto& t = doc_tokens[i];
        auto [it, inserted] = seen.emplace(t, stats.size());
        if (inserted) stats.push_back({t, 1, i});
        else ++stats[it->second].tf;
    }

    std::erase_if(stats, [&](const TermStat& s) { return query_set.count(s.term) != 0; });
    std::sort(stats.begin(), stats.end(), [](const TermStat& a, const TermStat& b) {
        if (a.tf != b.tf) return a.tf > b.tf;
        return a.first_pos < b.first_pos;
    });
    if (stats.size() > theta) stats.resize(theta);

    std::vector<std::string> terms;
    terms.reserve(stats.size());
    for (auto& s : stats) terms.push_back(std::move(s.term));
    return terms;
}

ExpandedQuery expand_query(const std::string& query_id, const std::string& query_text,
                           std::vector<std::string> terms) {
    const auto query_tokens = textproc::preprocess(query_text);
    const std::unordered_set<std::string> query_set(query_tokens.begin(), query_tokens.end());
    std::unordered_set<std::string> seen;
    for (const auto& term : terms) {
        if (!seen.insert(term).second)
            throw data_error("duplicate expansion term \"" + term + "\" for query " + query_id);
        for (const auto& stem : textproc::preprocess(term))
            if (query_set.count(stem))
                throw data_error("expansion term \"" + term + "\" overlaps the query for " +
                                 query_id);
    }

    ExpandedQuery eq;
    eq.query_id = query_id;
    eq.original = query_text;
    eq.expanded_text = query_text;
    for (const auto& term : terms) {
        eq.expanded_text += ' ';
        eq.expanded_text += term;
    }
    eq.expansion_terms = std::move(terms);
    return eq;
}

void write_expanded_queries(const std::vector<ExpandedQuery>& queries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open expanded-queries file for writing: " + path);
    for (const auto& q : queries) {
        json rec = {{"query_id", q.query_id},
                    {"original", q.original},
                    {"expansion_terms", q.expansion_terms},
                    {"expanded_text", q.expanded_text}};
        out << rec.dump() << '\n';
    }
    if (!out) throw data_error("error writing expanded-queries file: " + path);
}

namespace {

json parse_line(const std::string& raw, const std::string& path, std::size_t line) {
    json rec = json::parse(raw, nullptr, false);
    if (rec.is_discarded()) throw parse_error(path, line, "invalid JSON");
    if (!rec.is_object()) throw parse_error(path, line, "record is not a JSON object");
    return rec;
}

std::string get_string(const json& rec, const char* key, const std::string& path,
                       std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end())
        throw parse_error(path, line, std::string("missing field \"") + key + "\"");
    if (!it->is_string())
        throw parse_error(path, line, std::string("field \"") + key + "\" is not a string");
    return it->get<std::string>();
}

}  // namespace

std::vector<ExpandedQuery> read_expanded_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open expanded-queries file: " + path);

    std::vector<ExpandedQuery> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        json rec = parse_line(raw, path, line);

        ExpandedQuery q;
        q.query_id = get_string(rec, "query_id", path, line);
        q.original = get_string(rec, "original", path, line);
        q.expanded_text = get_string(rec, "expanded_text", path, line);
        auto terms = rec.find("expansion_terms");
        if (terms == rec.end() || !terms->is_array())
            throw parse_error(path, line, "missing array field \"expansion_terms\"");
        for (const auto& t : *terms) {
            if (!t.is_string())
                throw parse_error(path, line, "expansion_terms entry is not a string");
            q.expansion_terms.push_back(t.get<std::string>());
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<corpus::Query> read_queries_auto(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open queries file: " + path);

    std::vector<corpus::Query> out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (raw.empty()) continue;
        json rec = parse_line(raw, path, line);

        corpus::Query q;
        q.query_id = get_string(rec, "query_id", path, line);
        if (rec.contains("expanded_text")) q.text = get_string(rec, "expanded_text", path, line);
        else if (rec.contains("text")) q.text = get_string(rec, "text", path, line);
        else throw parse_error(path, line, "record has neither \"text\" nor \"expanded_text\"");
        q.text = unicode::nfc(q.text);
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace mlret::expansion
