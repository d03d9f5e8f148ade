#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace convogen {

struct GenParams {
    double temperature = 0.9;
    double top_p = 0.95;
    double frequency_penalty = 1.0;
    double presence_penalty = 0.6;
    int max_tokens = 1024;

    bool operator==(const GenParams&) const = default;

    // Throws ConfigError when a field is out of range.
    void validate() const;

    // Canonical key material for cache addressing.
    std::string cache_key() const;
};

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason r);
FinishReason finish_reason_from_string(std::string_view s);

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::string diagnostic;  // populated when finish_reason == error

    bool operator==(const Completion&) const = default;
};

// Text-generation and sequence-scoring capability surface. Implementations
// must be safe to share across pipeline workers.
class GenBackend {
public:
    virtual ~GenBackend() = default;

    virtual std::string name() const = 0;
    virtual bool supports_scoring() const = 0;

    // Throws PromptRejectedError on an empty prompt; transient failures are
    // raised as TransientBackendError (see RetryingBackend).
    virtual Completion complete(const std::string& prompt, const GenParams& params) = 0;

    // Total log-probability (<= 0) of `continuation` given `context`.
    // Throws CapabilityError when scoring is unsupported.
    virtual double score(const std::string& context, const std::string& continuation) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock backend

// Rule-driven mock: the whole pipeline becomes a pure function of
// (inputs, seed, mock tables). Rules match in order, first hit wins.
struct MockCompletionRule {
    std::vector<std::string> contains_all;  // all substrings must occur in the prompt
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
};

struct MockScoreRule {
    std::vector<std::string> contains_all;  // matched against the context
    std::map<std::string, double> values;   // continuation -> logprob (<= 0)
};

class MockBackend : public GenBackend {
public:
    MockBackend() = default;

    // Loads {"completions": [...], "scores": [...], "strict": bool} from JSON.
    static std::shared_ptr<MockBackend> from_file(const std::filesystem::path& path);

    std::string name() const override { return "mock"; }
    bool supports_scoring() const override { return scoring_enabled_; }

    Completion complete(const std::string& prompt, const GenParams& params) override;
    double score(const std::string& context, const std::string& continuation) override;

    void add_completion_rule(MockCompletionRule rule);
    void add_score_rule(MockScoreRule rule);
    void add_score_entry(const std::string& context, const std::string& continuation, double logprob);
    void set_strict(bool strict) { strict_ = strict; }
    void set_scoring_enabled(bool enabled) { scoring_enabled_ = enabled; }

    // Fault injection: the next `count` complete() calls raise a transient error.
    void inject_transient_failures(int count) { pending_failures_ = count; }

    int complete_calls() const { return complete_calls_.load(); }
    int score_calls() const { return score_calls_.load(); }
    void reset_counters();

private:
    std::vector<MockCompletionRule> completion_rules_;
    std::vector<MockScoreRule> score_rules_;
    std::map<std::pair<std::string, std::string>, double> score_table_;
    bool strict_ = false;
    bool scoring_enabled_ = true;
    std::atomic<int> pending_failures_{0};
    std::atomic<int> complete_calls_{0};
    std::atomic<int> score_calls_{0};
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Retry, rate limiting, caching

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_delay{200};
    double multiplier = 2.0;
};

// Sliding-window request limiter with an injectable clock for tests.
class RateLimiter {
public:
    RateLimiter(int max_per_window, std::chrono::milliseconds window);

    void acquire();  // blocks until a slot is free

    // Test hook: replace the wall clock and sleep with fakes (milliseconds).
    void set_clock(std::function<std::int64_t()> now_ms,
                   std::function<void(std::int64_t)> sleep_ms);

    int max_per_window() const { return max_per_window_; }

private:
    int max_per_window_;
    std::int64_t window_ms_;
    std::deque<std::int64_t> dispatched_;
    std::function<std::int64_t()> now_ms_;
    std::function<void(std::int64_t)> sleep_ms_;
    std::mutex mu_;
};

// Bounds the number of in-flight backend requests.
class InflightGate {
public:
    explicit InflightGate(int max_in_flight);
    void enter();
    void leave();

private:
    int max_in_flight_;
    int active_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

// Decorator: bounded retry with exponential backoff on transient failures,
// rate limiting, in-flight bounding, and prompt-size rejection. Exhausted
// retries yield an error Completion rather than an exception.
class RetryingBackend : public GenBackend {
public:
    RetryingBackend(std::shared_ptr<GenBackend> inner, RetryPolicy policy,
                    std::shared_ptr<RateLimiter> limiter = nullptr,
                    std::shared_ptr<InflightGate> gate = nullptr,
                    std::size_t max_prompt_chars = 0);

    std::string name() const override { return inner_->name(); }
    bool supports_scoring() const override { return inner_->supports_scoring(); }
    Completion complete(const std::string& prompt, const GenParams& params) override;
    double score(const std::string& context, const std::string& continuation) override;

    void set_sleep(std::function<void(std::chrono::milliseconds)> sleep_fn);

private:
    std::shared_ptr<GenBackend> inner_;
    RetryPolicy policy_;
    std::shared_ptr<RateLimiter> limiter_;
    std::shared_ptr<InflightGate> gate_;
    std::size_t max_prompt_chars_;
    std::function<void(std::chrono::milliseconds)> sleep_;
};

// On-disk response cache, content-addressed by (stage, backend, params,
// prompt) hash; one JSON file per entry, sharded by the first two hex chars.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<Completion> lookup_completion(const std::string& key);
    void store_completion(const std::string& key, const Completion& completion);

    std::optional<double> lookup_score(const std::string& key);
    void store_score(const std::string& key, double logprob);

    static std::string completion_key(const std::string& stage, const std::string& backend,
                                      const GenParams& params, const std::string& prompt);
    static std::string score_key(const std::string& stage, const std::string& backend,
                                 const std::string& context, const std::string& continuation);

private:
    std::filesystem::path path_for(const std::string& key) const;

    std::filesystem::path dir_;
    std::mutex mu_;
};

// Decorator: consults the cache before the inner backend. Error completions
// are never cached. Cached and uncached runs are byte-identical by design.
class CachingBackend : public GenBackend {
public:
    CachingBackend(std::shared_ptr<GenBackend> inner, std::shared_ptr<ResponseCache> cache,
                   std::string stage);

    std::string name() const override { return inner_->name(); }
    bool supports_scoring() const override { return inner_->supports_scoring(); }
    Completion complete(const std::string& prompt, const GenParams& params) override;
    double score(const std::string& context, const std::string& continuation) override;

private:
    std::shared_ptr<GenBackend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::string stage_;
};

// ---------------------------------------------------------------------------
// HTTP backend (completions-style JSON API)

struct HttpBackendConfig {
    std::string base_url;                    // e.g. https://api.example.com
    std::string completion_path = "/v1/completions";
    std::string model;
    std::string auth_env = "CONVOGEN_API_TOKEN";  // token read from env, never stored
    int timeout_seconds = 60;
};

// Maps complete() onto a sampling request and score() onto an echo+logprobs
// request (max_tokens=0, echo=true), summing the continuation token logprobs.
class HttpBackend : public GenBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string name() const override;
    bool supports_scoring() const override { return true; }
    Completion complete(const std::string& prompt, const GenParams& params) override;
    double score(const std::string& context, const std::string& continuation) override;

private:
    HttpBackendConfig config_;
    std::string token_;
};

}  // namespace convogen
