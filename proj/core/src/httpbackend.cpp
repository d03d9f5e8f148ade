#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/filters.hpp"
#include "convogen/genbackend.hpp"

namespace convogen {

namespace {

// 408/429 and 5xx are worth retrying; everything else is a hard failure.
bool is_transient_status(int status) {
    return status == 408 || status == 429 || status >= 500;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("http backend requires an endpoint URL");
    if (const char* token = std::getenv(config_.auth_env.c_str())) {
        token_ = token;
    }
}

std::string HttpBackend::name() const {
    return "http:" + config_.model;
}

Completion HttpBackend::complete(const std::string& prompt, const GenParams& params) {
    params.validate();
    if (prompt.empty()) throw PromptRejectedError("empty prompt");

    nlohmann::json body;
    body["model"] = config_.model;
    body["prompt"] = prompt;
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["frequency_penalty"] = params.frequency_penalty;
    body["presence_penalty"] = params.presence_penalty;
    body["max_tokens"] = params.max_tokens;

    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(config_.completion_path, headers, body.dump(), "application/json");
    if (!res) throw TransientBackendError("http request failed: no response");
    if (is_transient_status(res->status)) {
        throw TransientBackendError("http status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError("http status " + std::to_string(res->status) + ": " + res->body);
    }

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw BackendError("malformed completion response");
    }
    const auto& choice = j["choices"][0];
    Completion c;
    c.text = choice.value("text", "");
    c.finish_reason = finish_reason_from_string(choice.value("finish_reason", "stop"));
    return c;
}

double HttpBackend::score(const std::string& context, const std::string& continuation) {
    if (continuation.empty()) throw PromptRejectedError("empty continuation");

    // Echo-logprobs request: score the concatenation, then sum the logprobs of
    // tokens that start at or after the continuation boundary.
    nlohmann::json body;
    body["model"] = config_.model;
    body["prompt"] = context + continuation;
    body["max_tokens"] = 0;
    body["echo"] = true;
    body["logprobs"] = 0;
    body["temperature"] = 0.0;

    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(config_.completion_path, headers, body.dump(), "application/json");
    if (!res) throw TransientBackendError("http request failed: no response");
    if (is_transient_status(res->status)) {
        throw TransientBackendError("http status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw BackendError("http status " + std::to_string(res->status) + ": " + res->body);
    }

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
        throw BackendError("malformed scoring response");
    }
    const auto& lp = j["choices"][0]["logprobs"];
    if (!lp.contains("token_logprobs") || !lp.contains("text_offset")) {
        throw CapabilityError("backend response lacks echo logprobs; scoring unsupported");
    }

    const auto& offsets = lp["text_offset"];
    const auto& logprobs = lp["token_logprobs"];
    const std::size_t boundary = context.size();
    double total = 0.0;
    for (std::size_t i = 0; i < offsets.size() && i < logprobs.size(); ++i) {
        if (offsets[i].get<std::size_t>() >= boundary && !logprobs[i].is_null()) {
            total += logprobs[i].get<double>();
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// HttpSafetyClient

HttpSafetyClient::HttpSafetyClient(std::string base_url, std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {
    if (base_url_.empty()) throw ConfigError("http safety client requires an endpoint URL");
}

SafetyScores HttpSafetyClient::assess(const std::string& text) {
    nlohmann::json body;
    body["text"] = text;

    httplib::Client client(base_url_);
    client.set_read_timeout(timeout_seconds_, 0);
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw SafetyClientError("safety classifier unavailable" +
                                (res ? " (status " + std::to_string(res->status) + ")" : std::string()));
    }
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw SafetyClientError("malformed safety classifier response");

    SafetyScores scores;
    scores.needs_caution = j.value("needs_caution", false);
    scores.needs_intervention = j.value("needs_intervention", false);
    scores.violence = j.value("violence", 0.0);
    scores.hate = j.value("hate", 0.0);
    scores.sexually_explicit = j.value("sexually_explicit", 0.0);
    for (double v : {scores.violence, scores.hate, scores.sexually_explicit}) {
        if (v < 0.0 || v > 1.0) throw SafetyClientError("safety score outside [0, 1]");
    }
    return scores;
}

}  // namespace convogen
