#include "mlret/providers.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "mlret/errors.hpp"

namespace mlret::providers {

namespace {

using nlohmann::json;

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading-slash path, "/" if absent
};

SplitUrl split_url(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw config_error("provider endpoint is not a URL: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

json post_json(const HttpOptions& options, const json& body) {
    const SplitUrl url = split_url(options.endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(options.timeout_s, 0);
    client.set_read_timeout(options.timeout_s, 0);
    client.set_write_timeout(options.timeout_s, 0);

    httplib::Headers headers;
    if (!options.credential_env.empty()) {
        const char* token = std::getenv(options.credential_env.c_str());
        if (token && *token)
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const std::string payload = body.dump();
    std::string last_failure;
    const int attempts = options.max_attempts < 1 ? 1 : options.max_attempts;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1 && options.retry_backoff_ms > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(options.retry_backoff_ms * (attempt - 1)));

        auto res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error (" + httplib::to_string(res.error()) + ")";
            continue;  // retryable
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status != 200)
            throw provider_error(options.endpoint + ": HTTP " + std::to_string(res->status),
                                 /*retryable=*/false);

        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw provider_error(options.endpoint + ": response is not valid JSON",
                                 /*retryable=*/false);
        return parsed;
    }
    throw provider_error(options.endpoint + ": " + last_failure + " after " +
                             std::to_string(attempts) + " attempts",
                         /*retryable=*/false);
}

double require_number(const json& obj, const char* key, const std::string& endpoint) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw provider_error(endpoint + ": response missing numeric \"" + key + "\"",
                             /*retryable=*/false);
    return it->get<double>();
}

}  // namespace

std::string HttpTextGenerator::generate(const GenerationRequest& req) {
    const json body = {{"prompt", req.prompt},
                       {"temperature", req.temperature},
                       {"top_p", req.top_p},
                       {"max_tokens", req.max_tokens}};
    const json res = post_json(options_, body);
    auto it = res.find("text");
    if (it == res.end() || !it->is_string())
        throw provider_error(options_.endpoint + ": response missing string \"text\"",
                             /*retryable=*/false);
    return it->get<std::string>();
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts,
                                                     const std::string& role, std::size_t dim) {
    if (texts.empty()) return {};
    const json body = {{"texts", texts}, {"role", role}, {"dim", dim}};
    const json res = post_json(options_, body);
    auto it = res.find("vectors");
    if (it == res.end() || !it->is_array() || it->size() != texts.size())
        throw provider_error(options_.endpoint + ": response \"vectors\" missing or wrong length",
                             /*retryable=*/false);

    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& vec : *it) {
        if (!vec.is_array())
            throw provider_error(options_.endpoint + ": vector entry is not an array",
                                 /*retryable=*/false);
        std::vector<double> v;
        v.reserve(vec.size());
        for (const auto& x : vec) {
            if (!x.is_number())
                throw provider_error(options_.endpoint + ": vector entry is not numeric",
                                     /*retryable=*/false);
            v.push_back(x.get<double>());
        }
        out.push_back(std::move(v));
    }
    return out;
}

LabelLogits HttpLogitProvider::score(const std::string& prompt) {
    const json res = post_json(options_, json{{"prompt", prompt}});
    return {require_number(res, "yes_logit", options_.endpoint),
            require_number(res, "no_logit", options_.endpoint)};
}

}  // namespace mlret::providers
