#include "convogen/genbackend.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/hash.hpp"

namespace convogen {

namespace {

bool contains_all(const std::string& haystack, const std::vector<std::string>& needles) {
    for (const auto& n : needles) {
        if (haystack.find(n) == std::string::npos) return false;
    }
    return true;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void GenParams::validate() const {
    if (temperature < 0) throw ConfigError("temperature must be non-negative");
    if (top_p <= 0 || top_p > 1) throw ConfigError("top_p must be in (0, 1]");
    if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

std::string GenParams::cache_key() const {
    std::ostringstream os;
    os << "t=" << format_double(temperature) << ";p=" << format_double(top_p)
       << ";f=" << format_double(frequency_penalty) << ";pr=" << format_double(presence_penalty)
       << ";m=" << max_tokens;
    return os.str();
}

std::string_view to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

FinishReason finish_reason_from_string(std::string_view s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    return FinishReason::error;
}

// ---------------------------------------------------------------------------
// MockBackend

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mock script: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("mock script is not valid JSON: " + std::string(e.what()));
    }

    auto mock = std::make_shared<MockBackend>();
    mock->set_strict(j.value("strict", false));
    for (const auto& rule : j.value("completions", nlohmann::json::array())) {
        MockCompletionRule r;
        for (const auto& s : rule.value("contains_all", nlohmann::json::array())) {
            r.contains_all.push_back(s.get<std::string>());
        }
        r.text = rule.value("text", "");
        r.finish_reason = finish_reason_from_string(rule.value("finish_reason", "stop"));
        mock->add_completion_rule(std::move(r));
    }
    for (const auto& rule : j.value("scores", nlohmann::json::array())) {
        MockScoreRule r;
        for (const auto& s : rule.value("contains_all", nlohmann::json::array())) {
            r.contains_all.push_back(s.get<std::string>());
        }
        if (rule.contains("values")) {
            for (const auto& [k, v] : rule.at("values").items()) {
                double lp = v.get<double>();
                if (lp > 0) throw ConfigError("mock score for '" + k + "' must be a log-probability <= 0");
                r.values[k] = lp;
            }
        }
        mock->add_score_rule(std::move(r));
    }
    return mock;
}

void MockBackend::add_completion_rule(MockCompletionRule rule) {
    std::lock_guard lock(mu_);
    completion_rules_.push_back(std::move(rule));
}

void MockBackend::add_score_rule(MockScoreRule rule) {
    std::lock_guard lock(mu_);
    score_rules_.push_back(std::move(rule));
}

void MockBackend::add_score_entry(const std::string& context, const std::string& continuation,
                                  double logprob) {
    if (logprob > 0) throw ConfigError("mock score must be a log-probability <= 0");
    std::lock_guard lock(mu_);
    score_table_[{context, continuation}] = logprob;
}

void MockBackend::reset_counters() {
    complete_calls_ = 0;
    score_calls_ = 0;
}

Completion MockBackend::complete(const std::string& prompt, const GenParams& params) {
    params.validate();
    if (prompt.empty()) throw PromptRejectedError("empty prompt");
    complete_calls_.fetch_add(1);

    int pending = pending_failures_.load();
    while (pending > 0) {
        if (pending_failures_.compare_exchange_weak(pending, pending - 1)) {
            throw TransientBackendError("injected transient failure");
        }
    }

    std::lock_guard lock(mu_);
    for (const auto& rule : completion_rules_) {
        if (contains_all(prompt, rule.contains_all)) {
            return Completion{rule.text, rule.finish_reason, ""};
        }
    }
    if (strict_) {
        throw BackendError("strict mock has no completion rule for prompt: " +
                           prompt.substr(0, 80));
    }
    // Deterministic fallback keyed on the prompt content.
    return Completion{"mock completion " + hash_hex(prompt), FinishReason::stop, ""};
}

double MockBackend::score(const std::string& context, const std::string& continuation) {
    if (!scoring_enabled_) throw CapabilityError("mock backend configured without scoring");
    if (continuation.empty()) throw PromptRejectedError("empty continuation");
    score_calls_.fetch_add(1);

    std::lock_guard lock(mu_);
    auto exact = score_table_.find({context, continuation});
    if (exact != score_table_.end()) return exact->second;

    for (const auto& rule : score_rules_) {
        if (contains_all(context, rule.contains_all)) {
            auto it = rule.values.find(continuation);
            if (it != rule.values.end()) return it->second;
        }
    }
    if (strict_) {
        throw ScoreLookupError("strict mock has no score for continuation '" + continuation +
                               "' in context: " + context.substr(0, 80));
    }
    // Stable pseudo-score derived from the pair; always a valid log-prob.
    std::uint64_t h = fnv1a64(continuation, fnv1a64(context));
    return -1.0 - static_cast<double>(h % 1000) / 100.0;
}

// ---------------------------------------------------------------------------
// RateLimiter / InflightGate

RateLimiter::RateLimiter(int max_per_window, std::chrono::milliseconds window)
    : max_per_window_(max_per_window), window_ms_(window.count()) {
    if (max_per_window_ <= 0) throw ConfigError("rate limit must be positive");
    now_ms_ = [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
    sleep_ms_ = [](std::int64_t ms) {
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
}

void RateLimiter::set_clock(std::function<std::int64_t()> now_ms,
                            std::function<void(std::int64_t)> sleep_ms) {
    now_ms_ = std::move(now_ms);
    sleep_ms_ = std::move(sleep_ms);
}

void RateLimiter::acquire() {
    for (;;) {
        std::int64_t wait = 0;
        {
            std::lock_guard lock(mu_);
            std::int64_t now = now_ms_();
            while (!dispatched_.empty() && dispatched_.front() <= now - window_ms_) {
                dispatched_.pop_front();
            }
            if (static_cast<int>(dispatched_.size()) < max_per_window_) {
                dispatched_.push_back(now);
                return;
            }
            wait = dispatched_.front() + window_ms_ - now;
        }
        sleep_ms_(std::max<std::int64_t>(wait, 1));
    }
}

InflightGate::InflightGate(int max_in_flight) : max_in_flight_(max_in_flight) {
    if (max_in_flight_ <= 0) throw ConfigError("max_in_flight must be positive");
}

void InflightGate::enter() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return active_ < max_in_flight_; });
    ++active_;
}

void InflightGate::leave() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

// ---------------------------------------------------------------------------
// RetryingBackend

RetryingBackend::RetryingBackend(std::shared_ptr<GenBackend> inner, RetryPolicy policy,
                                 std::shared_ptr<RateLimiter> limiter,
                                 std::shared_ptr<InflightGate> gate, std::size_t max_prompt_chars)
    : inner_(std::move(inner)),
      policy_(policy),
      limiter_(std::move(limiter)),
      gate_(std::move(gate)),
      max_prompt_chars_(max_prompt_chars) {
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

void RetryingBackend::set_sleep(std::function<void(std::chrono::milliseconds)> sleep_fn) {
    sleep_ = std::move(sleep_fn);
}

Completion RetryingBackend::complete(const std::string& prompt, const GenParams& params) {
    if (prompt.empty()) throw PromptRejectedError("empty prompt");
    if (max_prompt_chars_ > 0 && prompt.size() > max_prompt_chars_) {
        throw PromptRejectedError("prompt exceeds " + std::to_string(max_prompt_chars_) +
                                  " characters; rejected before dispatch");
    }

    std::chrono::milliseconds delay = policy_.initial_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        if (limiter_) limiter_->acquire();
        if (gate_) gate_->enter();
        try {
            Completion c = inner_->complete(prompt, params);
            if (gate_) gate_->leave();
            return c;
        } catch (const TransientBackendError& e) {
            if (gate_) gate_->leave();
            last_error = e.what();
            if (attempt < policy_.max_attempts) {
                sleep_(delay);
                delay = std::chrono::milliseconds(
                    static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy_.multiplier));
            }
        } catch (...) {
            if (gate_) gate_->leave();
            throw;
        }
    }
    return Completion{"", FinishReason::error,
                      "retries exhausted after " + std::to_string(policy_.max_attempts) +
                          " attempts: " + last_error};
}

double RetryingBackend::score(const std::string& context, const std::string& continuation) {
    std::chrono::milliseconds delay = policy_.initial_delay;
    std::string last_error;
    for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
        if (limiter_) limiter_->acquire();
        if (gate_) gate_->enter();
        try {
            double s = inner_->score(context, continuation);
            if (gate_) gate_->leave();
            return s;
        } catch (const TransientBackendError& e) {
            if (gate_) gate_->leave();
            last_error = e.what();
            if (attempt < policy_.max_attempts) {
                sleep_(delay);
                delay = std::chrono::milliseconds(
                    static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy_.multiplier));
            }
        } catch (...) {
            if (gate_) gate_->leave();
            throw;
        }
    }
    throw BackendError("scoring retries exhausted: " + last_error);
}

// ---------------------------------------------------------------------------
// ResponseCache / CachingBackend

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<Completion> ResponseCache::lookup_completion(const std::string& key) {
    std::lock_guard lock(mu_);
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("text")) return std::nullopt;
    Completion c;
    c.text = j["text"].get<std::string>();
    c.finish_reason = finish_reason_from_string(j.value("finish_reason", "stop"));
    return c;
}

void ResponseCache::store_completion(const std::string& key, const Completion& completion) {
    if (completion.finish_reason == FinishReason::error) return;
    nlohmann::json j;
    j["text"] = completion.text;
    j["finish_reason"] = std::string(to_string(completion.finish_reason));

    std::lock_guard lock(mu_);
    auto path = path_for(key);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
}

std::optional<double> ResponseCache::lookup_score(const std::string& key) {
    std::lock_guard lock(mu_);
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("logprob")) return std::nullopt;
    return j["logprob"].get<double>();
}

void ResponseCache::store_score(const std::string& key, double logprob) {
    nlohmann::json j;
    j["logprob"] = logprob;

    std::lock_guard lock(mu_);
    auto path = path_for(key);
    std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
}

std::string ResponseCache::completion_key(const std::string& stage, const std::string& backend,
                                          const GenParams& params, const std::string& prompt) {
    std::string material = "c\x1f" + stage + "\x1f" + backend + "\x1f" + params.cache_key() +
                           "\x1f" + prompt;
    return hash_hex(material);
}

std::string ResponseCache::score_key(const std::string& stage, const std::string& backend,
                                     const std::string& context, const std::string& continuation) {
    std::string material = "s\x1f" + stage + "\x1f" + backend + "\x1f" + context + "\x1e" + continuation;
    return hash_hex(material);
}

CachingBackend::CachingBackend(std::shared_ptr<GenBackend> inner,
                               std::shared_ptr<ResponseCache> cache, std::string stage)
    : inner_(std::move(inner)), cache_(std::move(cache)), stage_(std::move(stage)) {}

Completion CachingBackend::complete(const std::string& prompt, const GenParams& params) {
    std::string key = ResponseCache::completion_key(stage_, inner_->name(), params, prompt);
    if (auto hit = cache_->lookup_completion(key)) return *hit;
    Completion c = inner_->complete(prompt, params);
    cache_->store_completion(key, c);
    return c;
}

double CachingBackend::score(const std::string& context, const std::string& continuation) {
    std::string key = ResponseCache::score_key(stage_, inner_->name(), context, continuation);
    if (auto hit = cache_->lookup_score(key)) return *hit;
    double s = inner_->score(context, continuation);
    cache_->store_score(key, s);
    return s;
}

}  // namespace convogen
