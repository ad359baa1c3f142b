#include "mlret/porter.hpp"

#include <array>
#include <cstddef>

namespace mlret::porter {

namespace {

bool is_cons(const std::string& w, std::size_t i) {
    switch (w[i]) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !is_cons(w, i - 1);
        default:
            return true;
    }
}

// m in the [C](VC){m}[V] decomposition of w[0..len).
int measure(const std::string& w, std::size_t len) {
    int m = 0;
    std::size_t i = 0;
    while (i < len && is_cons(w, i)) ++i;
    while (i < len) {
        while (i < len && !is_cons(w, i)) ++i;
        if (i == len) break;
        ++m;
        while (i < len && is_cons(w, i)) ++i;
    }
    return m;
}

bool has_vowel(const std::string& w, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i)
        if (!is_cons(w, i)) return true;
    return false;
}

bool ends_double_cons(const std::string& w) {
    std::size_t n = w.size();
    return n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1);
}

// cvc with the final consonant not w, x or y, tested on w[0..len).
bool ends_cvc(const std::string& w, std::size_t len) {
    if (len < 3) return false;
    if (!is_cons(w, len - 3) || is_cons(w, len - 2) || !is_cons(w, len - 1)) return false;
    char c = w[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
}

// The stem left after removing the suffix may be empty, so equality counts.
bool ends_with(const std::string& w, std::string_view suffix) {
    return w.size() >= suffix.size() &&
           std::string_view(w).substr(w.size() - suffix.size()) == suffix;
}

struct Rule {
    std::string_view suffix;
    std::string_view replacement;
};

// Longest matching suffix wins; its condition decides whether anything
// happens at all.
void apply_rule_list(std::string& w, const Rule* rules, std::size_t n, int min_measure) {
    const Rule* best = nullptr;
    for (std::size_t i = 0; i < n; ++i) {
        if (ends_with(w, rules[i].suffix) &&
            (!best || rules[i].suffix.size() > best->suffix.size()))
            best = &rules[i];
    }
    if (!best) return;
    std::size_t stem_len = w.size() - best->suffix.size();
    if (measure(w, stem_len) > min_measure) {
        w.resize(stem_len);
        w.append(best->replacement);
    }
}

void step1a(std::string& w) {
    if (w.back() != 's') return;
    if (ends_with(w, "sses"))
        w.resize(w.size() - 2);
    else if (ends_with(w, "ies"))
        w.resize(w.size() - 2);
    else if (!ends_with(w, "ss"))
        w.pop_back();
}

void step1b(std::string& w) {
    if (ends_with(w, "eed")) {
        if (measure(w, w.size() - 3) > 0) w.pop_back();
        return;
    }
    bool stripped = false;
    if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
        w.resize(w.size() - 2);
        stripped = true;
    } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
        w.resize(w.size() - 3);
        stripped = true;
    }
    if (!stripped) return;

    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
        w.push_back('e');
    } else if (ends_double_cons(w)) {
        char c = w.back();
        if (c != 'l' && c != 's' && c != 'z') w.pop_back();
    } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
        w.push_back('e');
    }
}

void step1c(std::string& w) {
    if (w.back() == 'y' && has_vowel(w, w.size() - 1)) w.back() = 'i';
}

constexpr std::array<Rule, 20> kStep2 = {{
    {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
    {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
    {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
    {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
    {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
}};

constexpr std::array<Rule, 7> kStep3 = {{
    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
    {"ical", "ic"},  {"ful", ""},   {"ness", ""},
}};

constexpr std::array<Rule, 19> kStep4 = {{
    {"al", ""},   {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},
    {"able", ""}, {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""},
    {"ent", ""},  {"ion", ""},  {"ou", ""},   {"ism", ""}, {"ate", ""},
    {"iti", ""},  {"ous", ""},  {"ive", ""},  {"ize", ""},
}};

void step4(std::string& w) {
    const Rule* best = nullptr;
    for (const Rule& r : kStep4) {
        if (ends_with(w, r.suffix) && (!best || r.suffix.size() > best->suffix.size()))
            best = &r;
    }
    if (!best) return;
    std::size_t stem_len = w.size() - best->suffix.size();
    if (measure(w, stem_len) <= 1) return;
    if (best->suffix == "ion") {
        char c = w[stem_len - 1];
        if (c != 's' && c != 't') return;
    }
    w.resize(stem_len);
}

void step5a(std::string& w) {
    if (w.back() != 'e') return;
    std::size_t stem_len = w.size() - 1;
    int m = measure(w, stem_len);
    if (m > 1 || (m == 1 && !ends_cvc(w, stem_len))) w.pop_back();
}

void step5b(std::string& w) {
    if (w.back() == 'l' && ends_double_cons(w) && measure(w, w.size()) > 1) w.pop_back();
}

}  // namespace

std::string stem(std::string_view word) {
    std::string w(word);
    if (w.size() < 3) return w;
    for (char c : w)
        if (c < 'a' || c > 'z') return w;

    step1a(w);
    step1b(w);
    step1c(w);
    apply_rule_list(w, kStep2.data(), kStep2.size(), 0);
    apply_rule_list(w, kStep3.data(), kStep3.size(), 0);
    step4(w);
    step5a(w);
    step5b(w);
    return w;
}

std::string stem_fixpoint(std::string_view word) {
    std::string cur(word);
    for (;;) {
        std::string next = stem(cur);
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

}  // namespace mlret::porter
