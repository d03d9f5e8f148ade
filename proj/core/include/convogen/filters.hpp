#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>

#include "convogen/distiller.hpp"
#include "convogen/genbackend.hpp"
#include "convogen/knowledge.hpp"
#include "convogen/templating.hpp"

namespace convogen {

enum class FilterStage { Basic, NonHuman, Safety, Commonsense };

std::string_view to_string(FilterStage s);
FilterStage filter_stage_from_string(std::string_view s);

struct FilterVerdict {
    bool passed = false;
    FilterStage stage = FilterStage::Basic;
    std::optional<std::string> reason;  // present iff !passed
    std::string detail;

    bool operator==(const FilterVerdict&) const = default;

    static FilterVerdict pass(FilterStage stage) { return {true, stage, std::nullopt, ""}; }
    static FilterVerdict fail(FilterStage stage, std::string reason, std::string detail = {}) {
        return {false, stage, std::move(reason), std::move(detail)};
    }
};

struct SafetyScores {
    bool needs_caution = false;
    bool needs_intervention = false;
    double violence = 0.0;
    double hate = 0.0;
    double sexually_explicit = 0.0;

    bool operator==(const SafetyScores&) const = default;
};

enum class McqChoice { yes, no, unknown };

std::string_view to_string(McqChoice c);
McqChoice mcq_choice_from_string(std::string_view s);

struct McqAnswer {
    McqChoice choice = McqChoice::unknown;
    std::map<std::string, double> pmi;  // choice -> PMI value

    bool operator==(const McqAnswer&) const = default;
};

struct FilterConfig {
    int min_turns = 4;
    int max_turns = 20;
    int max_speakers = 2;
    double toxicity_threshold = 0.5;   // strict: fails only above the threshold
    int repetition_window = 12;        // trailing n-gram size
    int repetition_min_repeats = 3;
    bool pmi_length_normalize = false; // divide scores by continuation token count
};

// --------------------------------------------------------------------------
// Basic filtering

// Total function over a parsed conversation. Fails with the first matching
// reason: Repetition, TooFewTurns, TooManyTurns, TooManySpeakers.
FilterVerdict basic_filter(const Conversation& conversation, const FilterConfig& config = {});

// Convenience for the pipeline: a failed parse maps onto the Basic stage
// (PrefixOmission and friends are the erroneous lexical patterns).
FilterVerdict basic_filter(const Result<Conversation>& parsed, const FilterConfig& config = {});

// Erroneous-pattern detector: identical consecutive utterances, or an
// utterance whose trailing window repeats at least `min_repeats` times.
bool has_repetition(const Conversation& conversation, int window, int min_repeats);

// --------------------------------------------------------------------------
// Non-human speaker filtering

// Case-insensitive membership index over a name pool: a speaker prefix counts
// as a hit when any whole token of it is a pool name (multi-word pool names
// match on word boundaries). Build once per run; lookups are O(prefix).
class NameIndex {
public:
    explicit NameIndex(const NamePool& pool);

    bool matches(const std::string& speaker_prefix) const;

private:
    std::unordered_set<std::string> single_word_;   // lowercased
    std::vector<std::string> multi_word_;           // lowercased
};

// Human-role lexicon: lowercase terms, one per line, '#' comments.
class HumanLexicon {
public:
    HumanLexicon() = default;
    explicit HumanLexicon(std::set<std::string> terms) : terms_(std::move(terms)) {}

    static HumanLexicon load(const std::filesystem::path& path);

    bool matches(const std::string& speaker_prefix) const;
    std::size_t size() const { return terms_.size(); }

private:
    std::set<std::string> terms_;
};

// Three-tier check per speaker: name pool, role lexicon, then the backend
// probe "Q: Is <prefix> a person?\nA:". A backend failure discards the
// conversation (conservative fail).
FilterVerdict nonhuman_speaker_filter(const Conversation& conversation, const NameIndex& names,
                                      const HumanLexicon& lexicon, GenBackend& backend);

// Convenience overload; builds the index per call.
FilterVerdict nonhuman_speaker_filter(const Conversation& conversation, const NamePool& pool,
                                      const HumanLexicon& lexicon, GenBackend& backend);

// --------------------------------------------------------------------------
// Safety filtering

class SafetyClient {
public:
    virtual ~SafetyClient() = default;
    virtual std::string name() const = 0;
    virtual SafetyScores assess(const std::string& text) = 0;
};

// Offline stub: category keyword lists; a hit pushes that category to 0.9,
// intervention terms set needs_intervention.
class KeywordSafetyClient : public SafetyClient {
public:
    KeywordSafetyClient(std::set<std::string> violence, std::set<std::string> hate,
                        std::set<std::string> sexual, std::set<std::string> intervention);

    // File format: "category term" per line, categories violence/hate/sexual/
    // intervention, '#' comments.
    static std::shared_ptr<KeywordSafetyClient> load(const std::filesystem::path& path);

    std::string name() const override { return "keyword"; }
    SafetyScores assess(const std::string& text) override;

private:
    std::set<std::string> violence_;
    std::set<std::string> hate_;
    std::set<std::string> sexual_;
    std::set<std::string> intervention_;
};

// Remote adapter: POST {"text": ...} -> SafetyScores JSON.
class HttpSafetyClient : public SafetyClient {
public:
    HttpSafetyClient(std::string base_url, std::string path, int timeout_seconds = 30);

    std::string name() const override { return "http"; }
    SafetyScores assess(const std::string& text) override;

private:
    std::string base_url_;
    std::string path_;
    int timeout_seconds_;
};

// Fails iff needs_intervention or any toxicity score is strictly above the
// threshold. Client errors propagate: safety is non-optional and the pipeline
// halts unless explicitly configured to skip (which watermarks all output).
FilterVerdict safety_filter(const Conversation& conversation, SafetyClient& client,
                            const FilterConfig& config = {});

// --------------------------------------------------------------------------
// Commonsense validation

// Prompt shapes used for PMI scoring; exposed so tests and mock scripts can
// address the exact strings.
struct PmiPrompts {
    std::string full;  // "<context>\nQ: <question>\nA:"
    std::string null;  // "Q: <question>\nA:"
};
PmiPrompts pmi_prompts(const std::string& context, const ValidationQuestion& question);

// Three-way MCQ via conditional PMI: pmi(c) = score(full, c) - score(null, c),
// argmax over {yes, no, unknown}; exact ties resolve to "unknown".
McqAnswer pmi_mcq(const std::string& context, const ValidationQuestion& question,
                  GenBackend& backend, const FilterConfig& config = {});

struct CommonsenseOutcome {
    FilterVerdict verdict;
    McqAnswer head;
    McqAnswer relation_tail;
    bool fully_encapsulating = false;
};

// Head question against the narrative, relation-tail question against the
// serialized conversation; fails iff the head answer is not "yes". Both
// answers are kept as annotations regardless.
CommonsenseOutcome commonsense_filter(const Triple& triple, const NameMap& names,
                                      const Narrative& narrative, const Conversation& conversation,
                                      GenBackend& backend, const TemplateSet& templates,
                                      const FilterConfig& config = {});

// --------------------------------------------------------------------------
// Chain

struct FilterChainDeps {
    const NameIndex* names = nullptr;
    const HumanLexicon* lexicon = nullptr;
    GenBackend* probe_backend = nullptr;    // non-human speaker probe
    GenBackend* scoring_backend = nullptr;  // commonsense PMI scoring
    SafetyClient* safety = nullptr;         // null: skip safety, watermark output
    const TemplateSet* templates = nullptr;
    FilterConfig config;
};

struct FilterChainResult {
    std::vector<FilterVerdict> verdicts;     // evaluated stages, in chain order
    std::optional<FilterVerdict> rejection;  // first and only failure, if any
    std::optional<McqAnswer> head;
    std::optional<McqAnswer> relation_tail;
    bool fully_encapsulating = false;
    bool safety_skipped = false;

    bool passed() const { return !rejection.has_value(); }
};

// Runs Basic -> NonHuman -> Safety -> Commonsense, short-circuiting at the
// first failure so later (more expensive) stages are never consulted. Safety
// client errors and scoring errors propagate as exceptions.
FilterChainResult run_filter_chain(const Triple& triple, const NameMap& names,
                                   const Narrative& narrative, const Conversation& conversation,
                                   const FilterChainDeps& deps);

}  // namespace convogen
