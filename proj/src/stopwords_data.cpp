// Embedded copy of data/stopwords_en.txt; the unit suite checks the two
// stay in sync. Edit the data file first, then mirror it here and bump the
// version tag in both places.

#include <cstddef>
#include <string_view>

namespace mlret::textproc::detail {

extern const char* const kStopwordsVersion;
extern const std::string_view kStopwords[];
extern const std::size_t kStopwordsCount;

const char* const kStopwordsVersion = "en-1";

const std::string_view kStopwords[] = {
    "a", "about", "above", "after", "again", "against", "all", "am", "an",
    "and", "any", "are", "aren", "as", "at", "be", "because", "been",
    "before", "being", "below", "between", "both", "but", "by", "can",
    "cannot", "could", "couldn", "did", "didn", "do", "does", "doesn",
    "doing", "don", "down", "during", "each", "few", "for", "from",
    "further", "had", "hadn", "has", "hasn", "have", "haven", "having",
    "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
    "i", "if", "in", "into", "is", "isn", "it", "its", "itself", "just",
    "ll", "me", "more", "most", "mustn", "my", "myself", "no", "nor", "not",
    "now", "of", "off", "on", "once", "only", "or", "other", "ought", "our",
    "ours", "ourselves", "out", "over", "own", "re", "same", "shan", "she",
    "should", "shouldn", "so", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "themselves", "then", "there", "these",
    "they", "this", "those", "through", "to", "too", "under", "until", "up",
    "ve", "very", "was", "wasn", "we", "were", "weren", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with",
    "would", "wouldn", "you", "your", "yours", "yourself", "yourselves",
};

const std::size_t kStopwordsCount = sizeof(kStopwords) / sizeof(kStopwords[0]);

}  // namespace mlret::textproc::detail
