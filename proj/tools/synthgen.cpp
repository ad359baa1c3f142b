// Generates the synthetic retrieval fixture: a 500-document corpus with
// planted topical structure, queries, graded judgments, and pseudo-document
// fixtures for the stub expander.
//
// Layout per topic (10 topics, three root terms each, six compound terms
// derived from the roots):
//   - 6 easy docs (grade 1): roots at tf 2, each compound once, light filler.
//   - 4 hard docs (grade 2): compounds only. Invisible to BM25 on the base
//     query because the compound stems share no term with the root stems.
//   - 6 distractors (grade 0): roots at tf 8 padded with a long filler tail,
//     so BM25 favors them while cosine similarity does not.
//   - 340 background docs (unjudged) drawn from a filler vocabulary whose
//     stems are disjoint from every root and compound.
//
// Pseudo-documents contain each compound three times and each root twice,
// glued together with stopwords, so term extraction against the base query
// yields exactly the six compound stems per topic.
//
// All randomness flows from one seeded splitmix64 stream, so a given seed
// always produces byte-identical fixture files. The generator validates the
// stem-level assumptions with the real preprocessing pipeline before writing
// and refuses to emit a fixture that breaks them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlret/expansion.hpp"
#include "mlret/textproc.hpp"

namespace {

using nlohmann::json;

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform value in [0, n). Modulo bias is irrelevant at fixture scale.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }
};

constexpr std::size_t kTopics = 10;
constexpr std::size_t kRootsPerTopic = 3;
constexpr std::size_t kCompoundsPerTopic = 6;

const std::array<std::array<const char*, kRootsPerTopic>, kTopics> kRoots = {{
    {"flood", "river", "basin"},
    {"storm", "coast", "harbor"},
    {"drought", "crop", "market"},
    {"quake", "tremor", "rubble"},
    {"blaze", "smoke", "canyon"},
    {"fever", "clinic", "nurse"},
    {"summit", "treaty", "border"},
    {"strike", "union", "wage"},
    {"bridge", "tunnel", "subway"},
    {"glacier", "tundra", "reindeer"},
}};

const std::array<const char*, 5> kSuffixes = {"water", "land", "fall", "zone", "gate"};

const std::array<const char*, 60> kBackground = {
    "window",  "debate",  "kitchen", "lantern", "pencil",  "voyage",  "meadow", "copper",
    "saddle",  "timber",  "bottle",  "garden",  "museum",  "ticket",  "engine", "yellow",
    "planet",  "singer",  "carpet",  "velvet",  "marble",  "pepper",  "candle", "butter",
    "ladder",  "mirror",  "helmet",  "pocket",  "barrel",  "castle",  "pillow", "cousin",
    "tailor",  "sermon",  "puzzle",  "napkin",  "magnet",  "violin",  "walnut", "ribbon",
    "lizard",  "donkey",  "hammer",  "parade",  "temple",  "basket",  "rocket", "tavern",
    "jungle",  "powder",  "turnip",  "goblet",  "orchard", "spindle", "trumpet", "lobster",
    "satchel", "bonfire", "antler",  "quiver",
};

// Two compounds per root; the suffix index walks the suffix table so every
// suffix appears across the corpus.
std::vector<std::string> topic_compounds(std::size_t topic) {
    std::vector<std::string> out;
    for (std::size_t r = 0; r < kRootsPerTopic; ++r) {
        const std::size_t global = topic * kRootsPerTopic + r;
        for (std::size_t j = 0; j < 2; ++j)
            out.push_back(std::string(kRoots[topic][r]) + kSuffixes[(global + j) % kSuffixes.size()]);
    }
    return out;
}

std::string query_text(std::size_t topic) {
    const auto& r = kRoots[topic];
    return std::string("the ") + r[0] + " in the " + r[1] + " " + r[2];
}

std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

struct SynthDoc {
    std::size_t topic = 0;  // meaningful only when judged
    int grade = -1;         // -1: unjudged background
    std::vector<std::string> tokens;
    std::string doc_id;  // assigned after the global shuffle
};

void append_background(std::vector<std::string>& tokens, std::size_t count, SplitMix64& rng) {
    for (std::size_t i = 0; i < count; ++i)
        tokens.push_back(kBackground[rng.below(kBackground.size())]);
}

// One stem for a word that must survive preprocessing as a single term.
std::string single_stem(const std::string& word) {
    const auto terms = mlret::textproc::preprocess(word);
    if (terms.size() != 1) {
        std::cerr << "fixture invariant broken: \"" << word << "\" preprocesses to "
                  << terms.size() << " terms\n";
        std::exit(2);
    }
    return terms[0];
}

// Aborts unless the planted vocabulary behaves as designed under the real
// preprocessing pipeline.
void validate_vocabulary() {
    std::set<std::string> root_stems;
    for (std::size_t t = 0; t < kTopics; ++t)
        for (const char* root : kRoots[t]) {
            const auto stem = single_stem(root);
            if (single_stem(std::string(root) + "s") != stem) {
                std::cerr << "fixture invariant broken: \"" << root
                          << "s\" does not stem to \"" << stem << "\"\n";
                std::exit(2);
            }
            if (!root_stems.insert(stem).second) {
                std::cerr << "fixture invariant broken: duplicate root stem \"" << stem << "\"\n";
                std::exit(2);
            }
        }

    std::set<std::string> compound_stems;
    for (std::size_t t = 0; t < kTopics; ++t)
        for (const auto& c : topic_compounds(t)) {
            const auto stem = single_stem(c);
            if (root_stems.count(stem) || !compound_stems.insert(stem).second) {
                std::cerr << "fixture invariant broken: compound stem \"" << stem
                          << "\" collides\n";
                std::exit(2);
            }
        }

    std::set<std::string> background_stems;
    for (const char* word : kBackground) {
        const auto stem = single_stem(word);
        if (root_stems.count(stem) || compound_stems.count(stem) ||
            !background_stems.insert(stem).second) {
            std::cerr << "fixture invariant broken: background stem \"" << stem
                      << "\" collides\n";
            std::exit(2);
        }
    }

    for (std::size_t t = 0; t < kTopics; ++t) {
        const auto q = mlret::textproc::preprocess(query_text(t));
        std::vector<std::string> expect;
        for (const char* root : kRoots[t]) expect.push_back(single_stem(root));
        if (q != expect) {
            std::cerr << "fixture invariant broken: query " << t
                      << " does not preprocess to its root stems\n";
            std::exit(2);
        }
    }
}

std::string pseudo_doc_text(std::size_t topic) {
    std::string out;
    for (const auto& c : topic_compounds(topic))
        out += "the " + c + " and the " + c + " with the " + c + " then ";
    for (const char* root : kRoots[topic])
        out += std::string("about the ") + root + " of the " + root + " ";
    out += "again";
    return out;
}

// The stub expander must recover exactly the six compound stems, in table
// order, for every topic.
void validate_pseudo_docs(std::size_t theta) {
    for (std::size_t t = 0; t < kTopics; ++t) {
        const auto terms =
            mlret::expansion::extract_terms(pseudo_doc_text(t), query_text(t), theta);
        std::vector<std::string> expect;
        for (const auto& c : topic_compounds(t)) expect.push_back(single_stem(c));
        if (terms != expect) {
            std::cerr << "fixture invariant broken: pseudo doc " << t
                      << " does not extract the compound stems\n";
            std::exit(2);
        }
    }
}

std::vector<SynthDoc> build_docs(SplitMix64& rng) {
    std::vector<SynthDoc> docs;
    for (std::size_t t = 0; t < kTopics; ++t) {
        const auto& roots = kRoots[t];
        const auto compounds = topic_compounds(t);

        for (std::size_t e = 0; e < 6; ++e) {
            SynthDoc d;
            d.topic = t;
            d.grade = 1;
            for (const char* root : roots) {
                d.tokens.push_back(root);
                d.tokens.push_back(std::string(root) + "s");
            }
            for (const auto& c : compounds) d.tokens.push_back(c);
            append_background(d.tokens, 8 + rng.below(5), rng);
            rng.shuffle(d.tokens);
            docs.push_back(std::move(d));
        }

        for (std::size_t h = 0; h < 4; ++h) {
            SynthDoc d;
            d.topic = t;
            d.grade = 2;
            for (std::size_t c = 0; c < compounds.size(); ++c) {
                const std::size_t tf = 2 + (h + c) % 2;
                for (std::size_t i = 0; i < tf; ++i) d.tokens.push_back(compounds[c]);
            }
            append_background(d.tokens, 10, rng);
            rng.shuffle(d.tokens);
            docs.push_back(std::move(d));
        }

        for (std::size_t x = 0; x < 6; ++x) {
            SynthDoc d;
            d.topic = t;
            d.grade = 0;
            for (const char* root : roots)
                for (std::size_t i = 0; i < 8; ++i)
                    d.tokens.push_back(i % 2 ? std::string(root) + "s" : std::string(root));
            append_background(d.tokens, 70 + rng.below(21), rng);
            rng.shuffle(d.tokens);
            docs.push_back(std::move(d));
        }
    }

    for (std::size_t b = 0; b < 340; ++b) {
        SynthDoc d;
        append_background(d.tokens, 25 + rng.below(21), rng);
        docs.push_back(std::move(d));
    }

    rng.shuffle(docs);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "d%03zu", i);
        docs[i].doc_id = id;
    }
    return docs;
}

// Original-language decoration. The Russian body carries a decomposed accent
// (e + U+0301) so ingest has real NFC work to do.
struct OriginalText {
    const char* lang;
    const char* title;
    const char* body;
};

const std::array<OriginalText, 3> kOriginals = {{
    {"zh", "新闻速报", "这是合成语料库中的一篇原始新闻正文。"},
    {"ar", "خبر عاجل", "هذا نص إخباري أصلي ضمن مجموعة اصطناعية."},
    {"ru", "Новости дня", "Это исходный текст новости; re\xcc\x81sume\xcc\x81 автора приложено."},
}};

int run(const std::string& out_dir, std::uint64_t seed, std::size_t theta) {
    validate_vocabulary();
    validate_pseudo_docs(theta);

    SplitMix64 rng(seed);
    auto docs = build_docs(rng);

    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    {
        std::ofstream f(path("corpus.jsonl"));
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const auto& d = docs[i];
            const auto& orig = kOriginals[i % kOriginals.size()];
            const std::size_t title_len = std::min<std::size_t>(3, d.tokens.size());
            json line = {
                {"doc_id", d.doc_id},
                {"lang", orig.lang},
                {"title", std::string(orig.title) + " " + std::to_string(i)},
                {"body", orig.body},
                {"trans_title", join(d.tokens, 0, title_len)},
                {"trans_body", join(d.tokens, title_len, d.tokens.size())},
            };
            f << line.dump() << '\n';
        }
    }

    {
        std::ofstream f(path("queries.jsonl"));
        for (std::size_t t = 0; t < kTopics; ++t) {
            char qid[8];
            std::snprintf(qid, sizeof qid, "q%02zu", t + 1);
            f << json{{"query_id", qid}, {"text", query_text(t)}}.dump() << '\n';
        }
    }

    {
        // qid -> doc_id -> grade, ordered for stable output.
        std::map<std::string, std::map<std::string, int>> judged;
        for (const auto& d : docs) {
            if (d.grade < 0) continue;
            char qid[8];
            std::snprintf(qid, sizeof qid, "q%02zu", d.topic + 1);
            judged[qid][d.doc_id] = d.grade;
        }
        std::ofstream f(path("qrels.txt"));
        for (const auto& [qid, by_doc] : judged)
            for (const auto& [doc_id, grade] : by_doc)
                f << qid << " 0 " << doc_id << " " << grade << '\n';
    }

    {
        std::ofstream f(path("pseudo_docs.jsonl"));
        for (std::size_t t = 0; t < kTopics; ++t) {
            char qid[8];
            std::snprintf(qid, sizeof qid, "q%02zu", t + 1);
            f << json{{"query_id", qid}, {"pseudo_doc", pseudo_doc_text(t)}}.dump() << '\n';
        }
    }

    std::cout << "wrote " << docs.size() << " docs, " << kTopics << " queries -> " << out_dir
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic retrieval fixture generator"};
    std::string out_dir;
    std::uint64_t seed = 20260819;
    std::size_t theta = 30;
    app.add_option("--out", out_dir, "Output directory")->required();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--theta", theta, "Expansion budget the pseudo docs are validated against")
        ->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    return run(out_dir, seed, theta);
}
