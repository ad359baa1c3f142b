#include "mlret/config.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <variant>

#include "mlret/errors.hpp"

namespace mlret::config {

namespace {

using TomlValue = std::variant<bool, std::int64_t, double, std::string>;

struct TomlDoc {
    std::string path;
    std::map<std::string, TomlValue> values;   // "section.key" -> value
    std::map<std::string, std::size_t> lines;  // for error messages
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Strips a trailing comment, respecting string quotes.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string unescape(const std::string& s, const std::string& path, std::size_t lineno) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (++i >= s.size()) throw parse_error(path, lineno, "dangling backslash in string");
        switch (s[i]) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            default:
                throw parse_error(path, lineno,
                                  std::string("unsupported escape \\") + s[i] + " in string");
        }
    }
    return out;
}

TomlValue parse_value(const std::string& raw, const std::string& path, std::size_t lineno) {
    if (raw.empty()) throw parse_error(path, lineno, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            throw parse_error(path, lineno, "unterminated string");
        return unescape(raw.substr(1, raw.size() - 2), path, lineno);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;

    const bool looks_float = raw.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (looks_float) {
            const double v = std::stod(raw, &used);
            if (used == raw.size()) return v;
        } else {
            const std::int64_t v = std::stoll(raw, &used);
            if (used == raw.size()) return v;
        }
    } catch (const std::exception&) {
        // fall through to the error below
    }
    throw parse_error(path, lineno, "cannot parse value: " + raw);
}

TomlDoc parse_toml(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);

    TomlDoc doc;
    doc.path = path;
    std::string section;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string text = trim(strip_comment(line));
        if (text.empty()) continue;

        if (text.front() == '[') {
            if (text.back() != ']')
                throw parse_error(path, lineno, "malformed section header: " + text);
            section = trim(text.substr(1, text.size() - 2));
            if (section.empty()) throw parse_error(path, lineno, "empty section name");
            continue;
        }

        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw parse_error(path, lineno, "expected key = value: " + text);
        const std::string key = trim(text.substr(0, eq));
        if (key.empty()) throw parse_error(path, lineno, "empty key");
        const std::string full = section.empty() ? key : section + '.' + key;
        if (doc.values.count(full))
            throw parse_error(path, lineno, "duplicate key: " + full);
        doc.values[full] = parse_value(trim(text.substr(eq + 1)), path, lineno);
        doc.lines[full] = lineno;
    }
    return doc;
}

class Reader {
public:
    explicit Reader(TomlDoc doc) : doc_(std::move(doc)) {}

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto* v = take(key);
        if (!v) return fallback;
        if (auto* s = std::get_if<std::string>(v)) return *s;
        throw config_error(where(key) + ": expected a string");
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto* v = take(key);
        if (!v) return fallback;
        if (auto* b = std::get_if<bool>(v)) return *b;
        throw config_error(where(key) + ": expected true or false");
    }

    std::size_t get_count(const std::string& key, std::size_t fallback) {
        auto* v = take(key);
        if (!v) return fallback;
        if (auto* i = std::get_if<std::int64_t>(v)) {
            if (*i <= 0) throw config_error(where(key) + ": must be positive");
            return static_cast<std::size_t>(*i);
        }
        throw config_error(where(key) + ": expected a positive integer");
    }

    void finish() const {
        for (const auto& [key, _] : doc_.values)
            if (!used_.count(key)) throw config_error(where(key) + ": unknown key");
    }

private:
    const TomlValue* take(const std::string& key) {
        auto it = doc_.values.find(key);
        if (it == doc_.values.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    std::string where(const std::string& key) const {
        auto it = doc_.lines.find(key);
        const std::string line =
            it == doc_.lines.end() ? "?" : std::to_string(it->second);
        return doc_.path + ":" + line + ": " + key;
    }

    TomlDoc doc_;
    std::set<std::string> used_;
};

ProviderConfig read_provider(Reader& r, const std::string& section) {
    ProviderConfig p;
    const std::string kind = r.get_string(section + ".kind", "stub");
    if (kind == "stub") p.kind = ProviderKind::stub;
    else if (kind == "http") p.kind = ProviderKind::http;
    else throw config_error(section + ".kind must be \"stub\" or \"http\", got \"" + kind + "\"");
    p.endpoint = r.get_string(section + ".endpoint", "");
    p.credential_env = r.get_string(section + ".credential_env", "");
    p.fixture = r.get_string(section + ".fixture", "");
    p.echo = r.get_string(section + ".echo", "");
    return p;
}

}  // namespace

const char* source_name(Source s) { return s == Source::base ? "base" : "expanded"; }

Source parse_source(const std::string& name) {
    if (name == "base") return Source::base;
    if (name == "expanded") return Source::expanded;
    throw config_error("query source must be \"base\" or \"expanded\", got \"" + name + "\"");
}

PipelineConfig load_config(const std::string& path) {
    Reader r(parse_toml(path));
    PipelineConfig cfg;

    cfg.run_tag = r.get_string("run_tag", cfg.run_tag);
    cfg.corpus_path = r.get_string("paths.corpus", "");
    cfg.queries_path = r.get_string("paths.queries", "");
    cfg.qrels_path = r.get_string("paths.qrels", "");
    cfg.index_path = r.get_string("paths.index", "");
    cfg.cache_dir = r.get_string("paths.cache_dir", "");
    cfg.output_dir = r.get_string("paths.output_dir", "");

    cfg.expansion_enabled = r.get_bool("stages.expansion", cfg.expansion_enabled);
    cfg.dense_enabled = r.get_bool("stages.dense", cfg.dense_enabled);
    cfg.rerank_enabled = r.get_bool("stages.rerank", cfg.rerank_enabled);

    cfg.sparse_query_source =
        parse_source(r.get_string("sources.sparse_query", source_name(cfg.sparse_query_source)));
    cfg.dense_query_source =
        parse_source(r.get_string("sources.dense_query", source_name(cfg.dense_query_source)));
    cfg.rerank_query_source =
        parse_source(r.get_string("sources.rerank_query", source_name(cfg.rerank_query_source)));

    cfg.theta = r.get_count("knobs.theta", cfg.theta);
    cfg.sparse_top_n = r.get_count("knobs.sparse_top_n", cfg.sparse_top_n);
    cfg.dense_cutoff = r.get_count("knobs.dense_cutoff", cfg.dense_cutoff);
    cfg.k = r.get_count("knobs.k", cfg.k);
    cfg.dim = r.get_count("knobs.dim", cfg.dim);
    cfg.max_units = r.get_count("knobs.max_units", cfg.max_units);
    cfg.workers = static_cast<unsigned>(r.get_count("knobs.workers", cfg.workers));
    cfg.use_cache = r.get_bool("knobs.use_cache", cfg.use_cache);

    cfg.generator = read_provider(r, "providers.generator");
    cfg.embedder = read_provider(r, "providers.embedder");
    cfg.scorer = read_provider(r, "providers.scorer");

    r.finish();
    validate(cfg);
    return cfg;
}

void validate(const PipelineConfig& cfg) {
    if (cfg.rerank_enabled && !cfg.dense_enabled)
        throw config_error("rerank stage requires the dense stage");
    if (!cfg.expansion_enabled) {
        if (cfg.sparse_query_source == Source::expanded)
            throw config_error("sources.sparse_query = \"expanded\" requires stages.expansion");
        if (cfg.dense_enabled && cfg.dense_query_source == Source::expanded)
            throw config_error("sources.dense_query = \"expanded\" requires stages.expansion");
        if (cfg.rerank_enabled && cfg.rerank_query_source == Source::expanded)
            throw config_error("sources.rerank_query = \"expanded\" requires stages.expansion");
    }
    if (cfg.corpus_path.empty()) throw config_error("paths.corpus is required");
    if (cfg.queries_path.empty()) throw config_error("paths.queries is required");
    if (cfg.output_dir.empty()) throw config_error("paths.output_dir is required");
    if (cfg.index_path.empty()) throw config_error("paths.index is required");
    if (cfg.use_cache && cfg.cache_dir.empty())
        throw config_error("paths.cache_dir is required unless knobs.use_cache = false");

    const auto check_provider = [](const ProviderConfig& p, const char* name) {
        if (p.kind == ProviderKind::http && p.endpoint.empty())
            throw config_error(std::string("providers.") + name +
                               ".endpoint is required for kind = \"http\"");
    };
    if (cfg.expansion_enabled) check_provider(cfg.generator, "generator");
    if (cfg.dense_enabled) check_provider(cfg.embedder, "embedder");
    if (cfg.rerank_enabled) check_provider(cfg.scorer, "scorer");
}

}  // namespace mlret::config
