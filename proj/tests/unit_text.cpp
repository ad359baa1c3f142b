#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "mlret/corpus.hpp"
#include "mlret/errors.hpp"
#include "mlret/porter.hpp"
#include "mlret/textproc.hpp"
#include "mlret/unicode.hpp"
#include "test_util.hpp"

using namespace mlret;

TEST_CASE("porter classic vectors") {
    // Example pairs from the algorithm's original description, one per rule
    // family. stem() is the single-pass algorithm.
    const std::vector<std::pair<const char*, const char*>> vectors = {
        {"caresses", "caress"}, {"ponies", "poni"},       {"ties", "ti"},
        {"caress", "caress"},   {"cats", "cat"},          {"feed", "feed"},
        {"agreed", "agre"},     {"plastered", "plaster"}, {"bled", "bled"},
        {"motoring", "motor"},  {"sing", "sing"},         {"conflated", "conflat"},
        {"troubled", "troubl"}, {"sized", "size"},        {"hopping", "hop"},
        {"tanned", "tan"},      {"falling", "fall"},      {"hissing", "hiss"},
        {"fizzed", "fizz"},     {"failing", "fail"},      {"filing", "file"},
        {"happy", "happi"},     {"sky", "sky"},           {"relational", "relat"},
        {"conditional", "condit"}, {"rational", "ration"}, {"valenci", "valenc"},
        {"hesitanci", "hesit"}, {"digitizer", "digit"},   {"conformabli", "conform"},
        {"radicalli", "radic"}, {"differentli", "differ"}, {"vileli", "vile"},
        {"analogousli", "analog"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
        {"operator", "oper"},   {"feudalism", "feudal"},  {"decisiveness", "decis"},
        {"hopefulness", "hope"}, {"callousness", "callous"}, {"formaliti", "formal"},
        {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"}, {"triplicate", "triplic"},
        {"formative", "form"},  {"formalize", "formal"},  {"electriciti", "electr"},
        {"electrical", "electr"}, {"hopeful", "hope"},    {"goodness", "good"},
        {"revival", "reviv"},   {"allowance", "allow"},   {"inference", "infer"},
        {"airliner", "airlin"}, {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"},
        {"defensible", "defens"}, {"irritant", "irrit"},  {"replacement", "replac"},
        {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"},
        {"homologou", "homolog"}, {"communism", "commun"}, {"activate", "activ"},
        {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
        {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"},
        {"cease", "ceas"},      {"controll", "control"},  {"roll", "roll"},
        {"flooding", "flood"},  {"rivers", "river"},      {"city", "citi"},
        {"cities", "citi"},     {"watching", "watch"},
    };
    for (const auto& [word, expected] : vectors) {
        CAPTURE(word);
        CHECK(porter::stem(word) == expected);
    }
}

TEST_CASE("porter guards") {
    // Words shorter than 3 letters and tokens with non-lowercase-ASCII
    // characters pass through unchanged.
    CHECK(porter::stem("a") == "a");
    CHECK(porter::stem("is") == "is");
    CHECK(porter::stem("w00") == "w00");
    CHECK(porter::stem("año") == "año");
    CHECK(porter::stem("") == "");
}

TEST_CASE("porter fixpoint is idempotent") {
    const std::vector<std::string> words = {
        "agreed",    "decisiveness", "callousness", "cease",     "riverfall",
        "floodgate", "basinzone",    "relational",  "abilities", "generalizations",
        "flooding",  "hopefulness",  "ties",        "analogousli",
    };
    for (const auto& w : words) {
        const auto once = porter::stem_fixpoint(w);
        CAPTURE(w);
        CHECK(porter::stem(once) == once);
        CHECK(porter::stem_fixpoint(once) == once);
    }
    // Single-pass leaves a re-stemmable residue on these; the fixpoint does not.
    CHECK(porter::stem("agreed") == "agre");
    CHECK(porter::stem_fixpoint("agreed") == "agr");
    CHECK(porter::stem("riverfall") == "riverfal");
    CHECK(porter::stem_fixpoint("riverfall") == "riverf");
}

TEST_CASE("stopword list") {
    const auto& sw = textproc::StopwordList::builtin();
    CHECK(sw.contains("the"));
    CHECK(sw.contains("and"));
    CHECK(sw.contains("of"));
    CHECK(sw.contains("is"));
    CHECK(!sw.contains("flood"));
    CHECK(!sw.contains(""));
    CHECK(sw.version == "en-1");

    SUBCASE("data file stays in sync with the embedded table") {
        const auto loaded = textproc::StopwordList::load(
            std::string(MLRET_SOURCE_DIR) + "/data/stopwords_en.txt");
        CHECK(loaded.version == sw.version);
        CHECK(loaded.words == sw.words);
    }

    SUBCASE("load parses comments, blank lines, and CRLF") {
        testutil::TempDir tmp;
        const auto path = testutil::write_file(tmp.file("sw.txt"),
                                               "# version: test-7\n\nalpha\r\nbeta\n# tail\n");
        const auto loaded = textproc::StopwordList::load(path);
        CHECK(loaded.version == "test-7");
        CHECK(loaded.contains("alpha"));
        CHECK(loaded.contains("beta"));
        CHECK(!loaded.contains("# tail"));
        CHECK(loaded.words.size() == 2);
    }

    SUBCASE("missing file errors") {
        CHECK_THROWS_AS(textproc::StopwordList::load("/nonexistent/sw.txt"), data_error);
    }
}

TEST_CASE("preprocess examples") {
    CHECK(textproc::preprocess("The rivers were flooding the city") ==
          std::vector<std::string>{"river", "flood", "citi"});
    CHECK(textproc::preprocess("") == std::vector<std::string>{});
    CHECK(textproc::preprocess("A a THE the") == std::vector<std::string>{});

    // Length-1 and pure-digit tokens drop; mixed alphanumerics survive.
    CHECK(textproc::preprocess("x 7 42 w00 2026ax") ==
          std::vector<std::string>{"w00", "2026ax"});

    // Punctuation splits; case folds.
    CHECK(textproc::preprocess("Flood-hit CITY; basins?!") ==
          std::vector<std::string>{"flood", "hit", "citi", "basin"});
}

TEST_CASE("preprocess is idempotent on its own output") {
    const std::vector<std::string> texts = {
        "The rivers were flooding the city overnight",
        "generalizations about hopefulness and decisiveness",
        "floodwater riverfall basinzone harborgate",
    };
    for (const auto& text : texts) {
        const auto once = textproc::preprocess(text);
        std::string joined;
        for (const auto& t : once) joined += t + " ";
        CAPTURE(text);
        CHECK(textproc::preprocess(joined) == once);
    }
}

TEST_CASE("preprocess handles non-ascii") {
    // NFC applies before tokenization: decomposed e+combining-acute folds to
    // the same terms as the precomposed form.
    const std::string decomposed = "re\xcc\x81sume\xcc\x81";  // e + U+0301
    const std::string precomposed = "r\xc3\xa9sum\xc3\xa9";
    CHECK(textproc::preprocess(decomposed) == textproc::preprocess(precomposed));
    CHECK(textproc::preprocess(precomposed).size() == 1);

    // Uppercase non-ASCII lowercases.
    CHECK(textproc::preprocess("BJ\xc3\x96RK") == textproc::preprocess("bj\xc3\xb6rk"));

    // CJK punctuation splits tokens; CJK ideographs are word characters.
    const auto cjk = textproc::preprocess("\xe6\xb4\xaa\xe6\xb0\xb4\xe3\x80\x82\xe5\x9f\x8e");
    CHECK(cjk.size() == 1);  // "洪水。城" -> 。 splits; "城" is length 1 and drops
    CHECK(cjk[0] == "\xe6\xb4\xaa\xe6\xb0\xb4");
}

TEST_CASE("custom stopword list overload") {
    textproc::StopwordList custom{{"flood"}, "custom-1"};
    CHECK(textproc::preprocess("flood river", custom) == std::vector<std::string>{"river"});
    // The active list is untouched.
    CHECK(textproc::preprocess("flood river") ==
          std::vector<std::string>{"flood", "river"});
}

TEST_CASE("term frequencies") {
    using Freqs = std::unordered_map<std::string, int>;
    CHECK(textproc::term_frequencies({"a", "b", "a"}) == Freqs{{"a", 2}, {"b", 1}});
    CHECK(textproc::term_frequencies({}) == Freqs{});
    CHECK(textproc::term_frequencies(textproc::preprocess("flood flood river")) ==
          Freqs{{"flood", 2}, {"river", 1}});
}

TEST_CASE("nfc normalization") {
    CHECK(unicode::nfc("abc") == "abc");  // ASCII fast path
    CHECK(unicode::nfc("re\xcc\x81sume\xcc\x81") == "r\xc3\xa9sum\xc3\xa9");
    CHECK(unicode::nfc("") == "");
}

TEST_CASE("corpus ingest") {
    testutil::TempDir tmp;

    SUBCASE("three documents round trip") {
        const auto path = testutil::write_file(
            tmp.file("c.jsonl"),
            R"({"doc_id":"a","lang":"de","title":"T1","body":"B1","trans_title":"flood","trans_body":"river"})"
            "\n"
            R"({"doc_id":"b","lang":"fr","title":"T2","body":"B2","trans_title":"storm","trans_body":""})"
            "\n"
            R"({"doc_id":"c","lang":"es","title":"T3","body":"B3","trans_title":"","trans_body":"coast"})"
            "\n");
        const auto corp = corpus::ingest_corpus(path);
        REQUIRE(corp.size() == 3);
        CHECK(corp.documents[0].doc_id == "a");
        CHECK(corp.id_index.at("b") == 1);
        CHECK(corp.find("c")->trans_body == "coast");
        CHECK(corp.find("missing") == nullptr);

        const auto out = tmp.file("out.jsonl");
        corpus::write_corpus(corp, out);
        const auto again = corpus::ingest_corpus(out);
        REQUIRE(again.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(again.documents[i].doc_id == corp.documents[i].doc_id);
            CHECK(again.documents[i].trans_title == corp.documents[i].trans_title);
            CHECK(again.documents[i].trans_body == corp.documents[i].trans_body);
        }
    }

    SUBCASE("duplicate id names the id") {
        const auto path = testutil::write_file(
            tmp.file("dup.jsonl"),
            R"({"doc_id":"a","lang":"x","title":"t","body":"b","trans_title":"u","trans_body":"v"})"
            "\n"
            R"({"doc_id":"a","lang":"x","title":"t","body":"b","trans_title":"u","trans_body":"v"})"
            "\n");
        CHECK_THROWS_WITH_AS(corpus::ingest_corpus(path), doctest::Contains("\"a\""),
                             data_error);
    }

    SUBCASE("both translations empty names the id") {
        const auto path = testutil::write_file(
            tmp.file("e.jsonl"),
            R"({"doc_id":"weird","lang":"x","title":"t","body":"b","trans_title":"","trans_body":""})"
            "\n");
        CHECK_THROWS_WITH_AS(corpus::ingest_corpus(path), doctest::Contains("weird"),
                             data_error);
    }

    SUBCASE("malformed json names the line") {
        const auto path = testutil::write_file(
            tmp.file("bad.jsonl"),
            R"({"doc_id":"a","lang":"x","title":"t","body":"b","trans_title":"u","trans_body":"v"})"
            "\n{oops\n");
        CHECK_THROWS_WITH_AS(corpus::ingest_corpus(path), doctest::Contains(":2"),
                             parse_error);
    }

    SUBCASE("missing field names the line") {
        const auto path =
            testutil::write_file(tmp.file("m.jsonl"), R"({"doc_id":"a","lang":"x"})" "\n");
        CHECK_THROWS_AS(corpus::ingest_corpus(path), parse_error);
    }

    SUBCASE("ingest applies nfc") {
        const auto path = testutil::write_file(
            tmp.file("n.jsonl"),
            "{\"doc_id\":\"a\",\"lang\":\"fr\",\"title\":\"re\xcc\x81sume\xcc\x81\","
            "\"body\":\"b\",\"trans_title\":\"u\",\"trans_body\":\"v\"}\n");
        const auto corp = corpus::ingest_corpus(path);
        CHECK(corp.documents[0].title == "r\xc3\xa9sum\xc3\xa9");
    }
}

TEST_CASE("translation view") {
    corpus::Document d;
    d.trans_title = "Flood hits city";
    d.trans_body = "Rivers rose overnight.";
    CHECK(corpus::translation_view(d, 100) == "Flood hits city\nRivers rose overnight.");

    d.trans_title = "";
    d.trans_body = "w1 w2 w3";
    CHECK(corpus::translation_view(d, 2) == "w1 w2");

    d.trans_title = "A B";
    d.trans_body = "C D";
    CHECK(corpus::translation_view(d, 3) == "A B\nC");
    CHECK(corpus::translation_view(d, 4) == "A B\nC D");
    CHECK(corpus::translation_view(d, 1) == "A");

    d.trans_title = "Only title";
    d.trans_body = "";
    CHECK(corpus::translation_view(d, 10) == "Only title");
}

TEST_CASE("read queries") {
    testutil::TempDir tmp;
    const auto path = testutil::write_file(
        tmp.file("q.jsonl"),
        R"({"query_id":"q2","text":"dam failure"})" "\n"
        R"({"query_id":"q1","text":"flood"})" "\n");
    const auto queries = corpus::read_queries(path);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].query_id == "q2");  // file order preserved; callers sort

    const auto dup = testutil::write_file(
        tmp.file("qd.jsonl"),
        R"({"query_id":"q1","text":"a"})" "\n" R"({"query_id":"q1","text":"b"})" "\n");
    CHECK_THROWS_WITH_AS(corpus::read_queries(dup), doctest::Contains("q1"), data_error);
}
