#include "mlret/textproc.hpp"

#include <unicode/uchar.h>

#include <fstream>

#include "mlret/errors.hpp"
#include "mlret/porter.hpp"
#include "mlret/unicode.hpp"

namespace mlret::textproc {

namespace detail {
extern const char* const kStopwordsVersion;
extern const std::string_view kStopwords[];
extern const std::size_t kStopwordsCount;
}  // namespace detail

const StopwordList& StopwordList::builtin() {
    static const StopwordList list = [] {
        StopwordList l;
        l.version = detail::kStopwordsVersion;
        for (std::size_t i = 0; i < detail::kStopwordsCount; ++i)
            l.words.emplace(detail::kStopwords[i]);
        return l;
    }();
    return list;
}

StopwordList StopwordList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open stopword list: " + path);

    StopwordList list;
    list.version = "unversioned";
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("version:");
            if (pos != std::string::npos) {
                auto tag = line.substr(pos + 8);
                auto b = tag.find_first_not_of(" \t");
                if (b != std::string::npos) list.version = tag.substr(b);
            }
            continue;
        }
        list.words.insert(line);
    }
    return list;
}

namespace {

StopwordList& active_list() {
    static StopwordList list = StopwordList::builtin();
    return list;
}

}  // namespace

const StopwordList& active_stopwords() { return active_list(); }

void set_active_stopwords(StopwordList list) { active_list() = std::move(list); }

TokenStream preprocess(std::string_view text) { return preprocess(text, active_stopwords()); }

namespace {

// Non-ASCII punctuation ranges treated as token boundaries. Everything else
// at or above U+0080 counts as a word character.
bool is_unicode_punct(char32_t cp) {
    return (cp >= 0x0080 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
           (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x2E00 && cp <= 0x2E7F) ||
           (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFE30 && cp <= 0xFE4F) ||
           (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
           (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

void append_codepoint(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

struct RawToken {
    std::string text;
    std::size_t codepoints = 0;
    bool all_digits = true;
};

}  // namespace

TokenStream preprocess(std::string_view text, const StopwordList& stopwords) {
    const std::string norm = unicode::nfc(text);

    TokenStream out;
    RawToken tok;
    const auto flush = [&] {
        if (tok.codepoints == 0) return;
        RawToken t = std::move(tok);
        tok = RawToken{};
        if (t.codepoints < 2 || t.all_digits) return;
        if (stopwords.contains(t.text)) return;

        std::string stem = porter::stem_fixpoint(t.text);
        // Stemming can land on a stopword ("ares" -> "are") or shrink below
        // two characters ("ies" -> "i"); those leave the stream.
        if (stem.size() < 2 || stopwords.contains(stem)) return;
        out.push_back(std::move(stem));
    };

    std::size_t i = 0;
    while (i < norm.size()) {
        char32_t cp = unicode::decode_utf8(norm, i);
        bool word_char;
        if (cp < 0x80) {
            if (cp >= 'A' && cp <= 'Z') cp += 'a' - 'A';
            word_char = (cp >= 'a' && cp <= 'z') || (cp >= '0' && cp <= '9');
            if (word_char && !(cp >= '0' && cp <= '9')) tok.all_digits = false;
        } else {
            word_char = !is_unicode_punct(cp) && cp != 0xFFFD;
            if (word_char) {
                cp = static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp)));
                tok.all_digits = false;
            }
        }
        if (word_char) {
            append_codepoint(tok.text, cp);
            ++tok.codepoints;
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::unordered_map<std::string, int> term_frequencies(const TokenStream& stream) {
    std::unordered_map<std::string, int> tf;
    for (const auto& t : stream) ++tf[t];
    return tf;
}

}  // namespace mlret::textproc
