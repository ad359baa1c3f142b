#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mlret::textproc {

// Ordered multiset of preprocessed terms. Every entry is non-empty,
// lowercase, whitespace-free and absent from the active stopword list.
using TokenStream = std::vector<std::string>;

struct StopwordList {
    std::unordered_set<std::string> words;
    std::string version;

    bool contains(std::string_view w) const {
        return words.count(std::string(w)) != 0;
    }

    // The embedded list shipped with the library (version tag "en-1").
    static const StopwordList& builtin();

    // Loads one word per line; '#'-prefixed lines are comments. A comment of
    // the form "# version: <tag>" sets the version, otherwise "unversioned".
    static StopwordList load(const std::string& path);
};

// Process-wide stopword list used when callers pass none; starts as
// builtin(). set_active_stopwords backs the --stopwords CLI override and
// must be called before any preprocessing work starts (it is not
// synchronized against concurrent preprocess calls).
const StopwordList& active_stopwords();
void set_active_stopwords(StopwordList list);

// Deterministic preprocessing shared by the sparse index and term
// extraction: NFC-normalize, lowercase, split on non-alphanumeric
// boundaries, drop pure-digit and single-character tokens, drop stopwords,
// then reduce each token to its Porter stem (iterated to a fixed point so
// preprocess is idempotent). Stems that collapse onto a stopword or a single
// character are dropped as well, keeping the stream's invariants intact.
//
// Codepoints >= U+0080 count as word characters unless they fall in a frozen
// set of punctuation ranges; they are lowercased per Unicode simple case
// mapping and passed through the stemmer untouched.
TokenStream preprocess(std::string_view text);
TokenStream preprocess(std::string_view text, const StopwordList& stopwords);

std::unordered_map<std::string, int> term_frequencies(const TokenStream& stream);

}  // namespace mlret::textproc
