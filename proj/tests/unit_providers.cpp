#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mlret/cache.hpp"
#include "mlret/errors.hpp"
#include "mlret/expansion.hpp"
#include "mlret/providers.hpp"
#include "mlret/rerank.hpp"
#include "mlret/stub_providers.hpp"
#include "test_util.hpp"

using namespace mlret;
using nlohmann::json;

TEST_CASE("sha256 hex") {
    CHECK(cache::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(cache::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(cache::sha256_hex(std::string_view("a\0b", 3)) != cache::sha256_hex("ab"));
}

TEST_CASE("disk cache") {
    testutil::TempDir tmp;
    cache::DiskCache c(tmp.file("cache/nested"));

    CHECK(!c.get("k1").has_value());
    CHECK(c.misses() == 1);
    c.put("k1", "hello");
    auto v = c.get("k1");
    REQUIRE(v.has_value());
    CHECK(*v == "hello");
    CHECK(c.hits() == 1);

    // Binary-safe values; overwrite is last-writer-wins.
    c.put("k1", std::string("\x00\x01\xff", 3));
    CHECK(c.get("k1")->size() == 3);

    // Keys with path-hostile characters are hashed to file names.
    c.put("../../etc/passwd\x1f://", "safe");
    CHECK(*c.get("../../etc/passwd\x1f://") == "safe");

    // A second handle over the same directory sees existing entries.
    cache::DiskCache c2(tmp.file("cache/nested"));
    CHECK(*c2.get("k1") == std::string("\x00\x01\xff", 3));
}

namespace {

// In-process HTTP server bound to an ephemeral port.
struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

providers::HttpOptions fast_options(const std::string& endpoint) {
    providers::HttpOptions o;
    o.endpoint = endpoint;
    o.retry_backoff_ms = 1;
    o.timeout_s = 5;
    return o;
}

}  // namespace

TEST_CASE("http text generator") {
    TestServer ts;
    std::atomic<int> calls{0};
    json seen_body;
    std::string seen_auth;
    ts.server.Post("/gen", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        seen_body = json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(json{{"text", "a generated article"}}.dump(), "application/json");
    });
    ts.start();

    setenv("MLRET_TEST_TOKEN", "sekret", 1);
    auto opt = fast_options(ts.url("/gen"));
    opt.credential_env = "MLRET_TEST_TOKEN";
    providers::HttpTextGenerator gen(opt.endpoint, opt);

    providers::GenerationRequest req;
    req.prompt = "write about floods";
    req.temperature = 0.7;
    req.top_p = 1.0;
    req.max_tokens = 512;
    CHECK(gen.generate(req) == "a generated article");
    CHECK(calls == 1);
    CHECK(seen_auth == "Bearer sekret");
    CHECK(seen_body["prompt"] == "write about floods");
    CHECK(seen_body["temperature"] == doctest::Approx(0.7));
    CHECK(seen_body["top_p"] == doctest::Approx(1.0));
    CHECK(seen_body["max_tokens"] == 512);
    unsetenv("MLRET_TEST_TOKEN");
}

TEST_CASE("http retry and failure classification") {
    TestServer ts;
    std::atomic<int> flaky_calls{0};
    std::atomic<int> notfound_calls{0};
    ts.server.Post("/flaky", [&](const httplib::Request&, httplib::Response& res) {
        if (++flaky_calls < 3) {
            res.status = 503;
            return;
        }
        res.set_content(json{{"text", "ok after retries"}}.dump(), "application/json");
    });
    ts.server.Post("/notfound", [&](const httplib::Request&, httplib::Response& res) {
        ++notfound_calls;
        res.status = 404;
    });
    ts.server.Post("/alwaysdown", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
    });
    ts.server.Post("/garbage", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{not json", "application/json");
    });
    ts.start();

    SUBCASE("5xx retries until success") {
        providers::HttpTextGenerator gen(ts.url("/flaky"), fast_options(ts.url("/flaky")));
        CHECK(gen.generate({"p", 0.7, 1.0, 512}) == "ok after retries");
        CHECK(flaky_calls == 3);
    }

    SUBCASE("4xx fails immediately") {
        providers::HttpTextGenerator gen(ts.url("/notfound"), fast_options(ts.url("/notfound")));
        CHECK_THROWS_WITH_AS(gen.generate({"p", 0.7, 1.0, 512}), doctest::Contains("404"),
                             provider_error);
        CHECK(notfound_calls == 1);
    }

    SUBCASE("persistent 5xx exhausts attempts") {
        providers::HttpTextGenerator gen(ts.url("/alwaysdown"),
                                         fast_options(ts.url("/alwaysdown")));
        CHECK_THROWS_WITH_AS(gen.generate({"p", 0.7, 1.0, 512}),
                             doctest::Contains("3 attempts"), provider_error);
    }

    SUBCASE("invalid json response") {
        providers::HttpTextGenerator gen(ts.url("/garbage"), fast_options(ts.url("/garbage")));
        CHECK_THROWS_AS(gen.generate({"p", 0.7, 1.0, 512}), provider_error);
    }

    SUBCASE("unreachable endpoint") {
        auto opt = fast_options("http://127.0.0.1:1/gone");
        opt.timeout_s = 1;
        providers::HttpTextGenerator gen(opt.endpoint, opt);
        CHECK_THROWS_AS(gen.generate({"p", 0.7, 1.0, 512}), provider_error);
    }

    SUBCASE("bad endpoint url") {
        providers::HttpTextGenerator gen("nourl", fast_options("nourl"));
        CHECK_THROWS_AS(gen.generate({"p", 0.7, 1.0, 512}), config_error);
    }
}

TEST_CASE("http embedder") {
    TestServer ts;
    json seen_body;
    ts.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        json vectors = json::array();
        for (std::size_t i = 0; i < seen_body["texts"].size(); ++i)
            vectors.push_back(json::array({1.0 * (i + 1), 2.0, 3.0}));
        res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    ts.server.Post("/short", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"vectors", json::array()}}.dump(), "application/json");
    });
    ts.start();

    providers::HttpEmbedder emb(ts.url("/embed"), fast_options(ts.url("/embed")));
    const auto vecs = emb.embed({"alpha", "beta"}, "document", 3);
    REQUIRE(vecs.size() == 2);
    CHECK(vecs[0] == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(vecs[1] == std::vector<double>{2.0, 2.0, 3.0});
    CHECK(seen_body["texts"] == json::array({"alpha", "beta"}));
    CHECK(seen_body["role"] == "document");
    CHECK(seen_body["dim"] == 3);

    providers::HttpEmbedder bad(ts.url("/short"), fast_options(ts.url("/short")));
    CHECK_THROWS_AS(bad.embed({"alpha"}, "query", 3), provider_error);
}

TEST_CASE("http logit provider") {
    TestServer ts;
    json seen_body;
    ts.server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = json::parse(req.body);
        res.set_content(json{{"yes_logit", 1.5}, {"no_logit", -0.5}}.dump(),
                        "application/json");
    });
    ts.server.Post("/partial", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"yes_logit", 1.5}}.dump(), "application/json");
    });
    ts.start();

    providers::HttpLogitProvider scorer(ts.url("/score"), fast_options(ts.url("/score")));
    const auto logits = scorer.score("judge this");
    CHECK(logits.yes_logit == 1.5);
    CHECK(logits.no_logit == -0.5);
    CHECK(seen_body["prompt"] == "judge this");

    providers::HttpLogitProvider bad(ts.url("/partial"), fast_options(ts.url("/partial")));
    CHECK_THROWS_AS(bad.score("judge this"), provider_error);
}

TEST_CASE("stub generator") {
    SUBCASE("echo mode returns the configured text") {
        auto gen = stub::StubGenerator::echo("flood flood river city");
        CHECK(gen.generate({"anything", 0.7, 1.0, 512}) == "flood flood river city");
    }

    SUBCASE("fixture mode keys on the recovered query") {
        testutil::TempDir tmp;
        const auto path = testutil::write_file(
            tmp.file("fx.jsonl"),
            R"({"query_id":"q1","pseudo_doc":"article about dams"})" "\n"
            R"({"query_id":"zz","pseudo_doc":"ignored, unknown query id"})" "\n");
        auto gen = stub::StubGenerator::from_fixture(path, {{"q1", "dam failure"}});

        providers::GenerationRequest req;
        req.prompt = expansion::build_pseudo_doc_prompt("dam failure");
        CHECK(gen.generate(req) == "article about dams");

        // Unknown query falls back to echoing the query text.
        req.prompt = expansion::build_pseudo_doc_prompt("unlisted query");
        CHECK(gen.generate(req) == "unlisted query");
    }

    SUBCASE("default stub echoes the query recovered from the prompt") {
        stub::StubGenerator gen;
        providers::GenerationRequest req;
        req.prompt = expansion::build_pseudo_doc_prompt("the flood in the river basin");
        CHECK(gen.generate(req) == "the flood in the river basin");
        // Non-template prompts come back verbatim.
        CHECK(gen.generate({"free-form prompt", 0.7, 1.0, 16}) == "free-form prompt");
    }
}

TEST_CASE("stub embedder") {
    const auto v1 = stub::StubEmbedder::embed_one("flood water rising", 64);
    const auto v2 = stub::StubEmbedder::embed_one("flood water rising", 64);
    CHECK(v1 == v2);  // bit-identical determinism
    REQUIRE(v1.size() == 64);

    double norm = 0.0;
    for (double x : v1) norm += x * x;
    CHECK(norm > 0.0);

    // Shared character 4-grams put related strings closer than unrelated ones.
    const auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        return dot / std::sqrt(na * nb);
    };
    const auto related = stub::StubEmbedder::embed_one("floodwater rising", 64);
    const auto unrelated = stub::StubEmbedder::embed_one("velvet puzzle trumpet", 64);
    CHECK(cos(v1, related) > cos(v1, unrelated));

    // The batch interface matches per-text embedding, any order.
    stub::StubEmbedder emb;
    const auto batch = emb.embed({"velvet puzzle trumpet", "flood water rising"}, "query", 64);
    REQUIRE(batch.size() == 2);
    CHECK(batch[0] == unrelated);
    CHECK(batch[1] == v1);

    // Case and tokenization fold the same way.
    CHECK(stub::StubEmbedder::embed_one("FLOOD, water; RISING", 64) == v1);

    auto fixed = stub::StubEmbedder::fixed({3.0, 4.0, 0.0});
    CHECK(fixed.embed({"x"}, "document", 3)[0] == std::vector<double>{3.0, 4.0, 0.0});
}

TEST_CASE("stub scorer") {
    SUBCASE("overlap mode counts query stems in the document") {
        stub::StubScorer scorer;
        const auto prompt = rerank::build_reranker_prompt(
            "flood river basin", "the flooding rivers reached the city");
        const auto logits = scorer.score(prompt);
        CHECK(logits.yes_logit == 2.0);  // flood, river present
        CHECK(logits.no_logit == 1.0);   // basin absent

        const auto none = scorer.score(
            rerank::build_reranker_prompt("flood river basin", "velvet puzzle"));
        CHECK(none.yes_logit == 0.0);
        CHECK(none.no_logit == 3.0);
    }

    SUBCASE("fixed mode returns configured logits") {
        auto scorer = stub::StubScorer::fixed(2.0, -1.0);
        const auto logits = scorer.score("anything");
        CHECK(logits.yes_logit == 2.0);
        CHECK(logits.no_logit == -1.0);
    }
}
