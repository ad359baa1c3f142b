#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mlret::providers {

struct GenerationRequest {
    std::string prompt;
    double temperature = 0.7;
    double top_p = 1.0;
    int max_tokens = 512;
};

class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual const std::string& id() const = 0;
    virtual std::string generate(const GenerationRequest& req) = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const std::string& id() const = 0;
    // One raw (un-normalized) vector per input text, order-preserving. The
    // caller truncates to its configured dim and L2-normalizes.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                   const std::string& role,
                                                   std::size_t dim) = 0;
};

struct LabelLogits {
    double yes_logit;
    double no_logit;
};

class LogitProvider {
public:
    virtual ~LogitProvider() = default;
    virtual const std::string& id() const = 0;
    virtual LabelLogits score(const std::string& prompt) = 0;
};

// Shared settings for the HTTP-backed providers. `credential_env` names an
// environment variable holding a bearer token; empty means no auth header.
// Transport failures and 5xx responses are retried up to max_attempts with
// linear backoff, then surfaced as a hard provider_error; 4xx fails at once.
struct HttpOptions {
    std::string endpoint;  // full URL, e.g. "http://127.0.0.1:8080/generate"
    std::string credential_env;
    int max_attempts = 3;
    int retry_backoff_ms = 100;
    int timeout_s = 60;
};

// POST {"prompt", "temperature", "top_p", "max_tokens"} -> {"text": str}
class HttpTextGenerator : public TextGenerator {
public:
    HttpTextGenerator(std::string id, HttpOptions options)
        : id_(std::move(id)), options_(std::move(options)) {}
    const std::string& id() const override { return id_; }
    std::string generate(const GenerationRequest& req) override;

private:
    std::string id_;
    HttpOptions options_;
};

// POST {"texts": [str], "role": "query"|"document", "dim": int}
//   -> {"vectors": [[num]]}, one vector per input, order-preserving.
class HttpEmbedder : public Embedder {
public:
    HttpEmbedder(std::string id, HttpOptions options)
        : id_(std::move(id)), options_(std::move(options)) {}
    const std::string& id() const override { return id_; }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                           const std::string& role, std::size_t dim) override;

private:
    std::string id_;
    HttpOptions options_;
};

// POST {"prompt": str} -> {"yes_logit": num, "no_logit": num}
class HttpLogitProvider : public LogitProvider {
public:
    HttpLogitProvider(std::string id, HttpOptions options)
        : id_(std::move(id)), options_(std::move(options)) {}
    const std::string& id() const override { return id_; }
    LabelLogits score(const std::string& prompt) override;

private:
    std::string id_;
    HttpOptions options_;
};

}  // namespace mlret::providers
