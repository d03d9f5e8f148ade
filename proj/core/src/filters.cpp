#include "convogen/filters.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

std::string_view to_string(FilterStage s) {
    switch (s) {
        case FilterStage::Basic: return "Basic";
        case FilterStage::NonHuman: return "NonHuman";
        case FilterStage::Safety: return "Safety";
        case FilterStage::Commonsense: return "Commonsense";
    }
    return "Basic";
}

FilterStage filter_stage_from_string(std::string_view s) {
    if (s == "NonHuman") return FilterStage::NonHuman;
    if (s == "Safety") return FilterStage::Safety;
    if (s == "Commonsense") return FilterStage::Commonsense;
    return FilterStage::Basic;
}

std::string_view to_string(McqChoice c) {
    switch (c) {
        case McqChoice::yes: return "yes";
        case McqChoice::no: return "no";
        case McqChoice::unknown: return "unknown";
    }
    return "unknown";
}

McqChoice mcq_choice_from_string(std::string_view s) {
    if (s == "yes") return McqChoice::yes;
    if (s == "no") return McqChoice::no;
    return McqChoice::unknown;
}

// --------------------------------------------------------------------------
// Basic

bool has_repetition(const Conversation& conversation, int window, int min_repeats) {
    const auto& turns = conversation.turns;
    for (std::size_t i = 1; i < turns.size(); ++i) {
        if (turns[i].utterance == turns[i - 1].utterance) return true;
    }
    if (window <= 0 || min_repeats <= 1) return false;

    for (const auto& turn : turns) {
        std::vector<std::string> tokens = tokenize_words(turn.utterance);
        const std::size_t w = static_cast<std::size_t>(window);
        if (tokens.size() < w) continue;
        // trailing n-gram of the utterance
        std::vector<std::string> tail(tokens.end() - static_cast<std::ptrdiff_t>(w), tokens.end());
        int count = 0;
        for (std::size_t start = 0; start + w <= tokens.size(); ++start) {
            bool match = true;
            for (std::size_t k = 0; k < w; ++k) {
                if (tokens[start + k] != tail[k]) {
                    match = false;
                    break;
                }
            }
            if (match) ++count;
        }
        if (count >= min_repeats) return true;
    }
    return false;
}

FilterVerdict basic_filter(const Conversation& conversation, const FilterConfig& config) {
    if (has_repetition(conversation, config.repetition_window, config.repetition_min_repeats)) {
        return FilterVerdict::fail(FilterStage::Basic, "Repetition");
    }
    const int turns = static_cast<int>(conversation.turns.size());
    if (turns < config.min_turns) {
        return FilterVerdict::fail(FilterStage::Basic, "TooFewTurns", std::to_string(turns) + " turns");
    }
    if (turns > config.max_turns) {
        return FilterVerdict::fail(FilterStage::Basic, "TooManyTurns", std::to_string(turns) + " turns");
    }
    const int speakers = static_cast<int>(conversation.speakers.size());
    if (speakers > config.max_speakers) {
        return FilterVerdict::fail(FilterStage::Basic, "TooManySpeakers",
                                   std::to_string(speakers) + " speakers");
    }
    return FilterVerdict::pass(FilterStage::Basic);
}

FilterVerdict basic_filter(const Result<Conversation>& parsed, const FilterConfig& config) {
    if (!parsed.ok()) {
        return FilterVerdict::fail(FilterStage::Basic, parsed.error().code, parsed.error().detail);
    }
    return basic_filter(parsed.value(), config);
}

// --------------------------------------------------------------------------
// Non-human speakers

HumanLexicon HumanLexicon::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open human-role lexicon: " + path.string());
    std::set<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        std::string term = trim(line);
        if (term.empty() || term[0] == '#') continue;
        terms.insert(ascii_lower(term));
    }
    if (terms.empty()) throw ConfigError("human-role lexicon is empty: " + path.string());
    return HumanLexicon(std::move(terms));
}

bool HumanLexicon::matches(const std::string& speaker_prefix) const {
    std::string lowered = ascii_lower(trim(speaker_prefix));
    if (terms_.count(lowered) > 0) return true;
    // Word-level scan keeps titles with their period ("mrs." style entries).
    std::string word;
    auto check = [&](const std::string& w) { return !w.empty() && terms_.count(w) > 0; };
    for (std::size_t i = 0; i <= lowered.size(); ++i) {
        char c = i < lowered.size() ? lowered[i] : ' ';
        if (c == ' ' || c == '\t') {
            if (check(word)) return true;
            // also try without trailing punctuation ("coach," -> "coach")
            while (!word.empty() && !std::isalnum(static_cast<unsigned char>(word.back()))) {
                word.pop_back();
                if (check(word)) return true;
            }
            word.clear();
        } else {
            word.push_back(c);
        }
    }
    return false;
}

NameIndex::NameIndex(const NamePool& pool) {
    for (const auto& name : pool.names) {
        std::string lowered = ascii_lower(name);
        if (lowered.find(' ') == std::string::npos) {
            single_word_.insert(std::move(lowered));
        } else {
            multi_word_.push_back(std::move(lowered));
        }
    }
}

bool NameIndex::matches(const std::string& speaker_prefix) const {
    for (const auto& token : tokenize_words(speaker_prefix)) {
        if (single_word_.count(token) > 0) return true;
    }
    if (!multi_word_.empty()) {
        std::string lowered = ascii_lower(speaker_prefix);
        for (const auto& name : multi_word_) {
            std::size_t pos = lowered.find(name);
            while (pos != std::string::npos) {
                bool left_ok =
                    pos == 0 || !std::isalnum(static_cast<unsigned char>(lowered[pos - 1]));
                std::size_t end = pos + name.size();
                bool right_ok = end >= lowered.size() ||
                                !std::isalnum(static_cast<unsigned char>(lowered[end]));
                if (left_ok && right_ok) return true;
                pos = lowered.find(name, pos + 1);
            }
        }
    }
    return false;
}

FilterVerdict nonhuman_speaker_filter(const Conversation& conversation, const NameIndex& names,
                                      const HumanLexicon& lexicon, GenBackend& backend) {
    GenParams probe_params;
    probe_params.temperature = 0.0;
    probe_params.top_p = 1.0;
    probe_params.frequency_penalty = 0.0;
    probe_params.presence_penalty = 0.0;
    probe_params.max_tokens = 16;

    for (const auto& speaker : conversation.speakers) {
        if (names.matches(speaker)) continue;    // tier 1: name base
        if (lexicon.matches(speaker)) continue;  // tier 2: role lexicon
        try {                                    // tier 3: ask the backend
            Completion c = backend.complete(nonhuman_probe_prompt(speaker), probe_params);
            if (c.finish_reason == FinishReason::error || !starts_with_ci(trim(c.text), "yes")) {
                return FilterVerdict::fail(FilterStage::NonHuman, "NonHumanSpeaker", speaker);
            }
        } catch (const BackendError& e) {
            // conservative: discard rather than keep an unverified speaker
            return FilterVerdict::fail(FilterStage::NonHuman, "NonHumanSpeaker",
                                       speaker + " (backend failure: " + e.what() + ")");
        }
    }
    return FilterVerdict::pass(FilterStage::NonHuman);
}

FilterVerdict nonhuman_speaker_filter(const Conversation& conversation, const NamePool& pool,
                                      const HumanLexicon& lexicon, GenBackend& backend) {
    return nonhuman_speaker_filter(conversation, NameIndex(pool), lexicon, backend);
}

// --------------------------------------------------------------------------
// Safety

KeywordSafetyClient::KeywordSafetyClient(std::set<std::string> violence, std::set<std::string> hate,
                                         std::set<std::string> sexual,
                                         std::set<std::string> intervention)
    : violence_(std::move(violence)),
      hate_(std::move(hate)),
      sexual_(std::move(sexual)),
      intervention_(std::move(intervention)) {}

std::shared_ptr<KeywordSafetyClient> KeywordSafetyClient::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open safety keyword file: " + path.string());
    std::set<std::string> violence, hate, sexual, intervention;
    std::string line;
    while (std::getline(in, line)) {
        std::string entry = trim(line);
        if (entry.empty() || entry[0] == '#') continue;
        std::size_t space = entry.find(' ');
        if (space == std::string::npos) continue;
        std::string category = entry.substr(0, space);
        std::string term = ascii_lower(trim(entry.substr(space + 1)));
        if (term.empty()) continue;
        if (category == "violence") violence.insert(term);
        else if (category == "hate") hate.insert(term);
        else if (category == "sexual") sexual.insert(term);
        else if (category == "intervention") intervention.insert(term);
        else throw ConfigError("unknown safety keyword category: " + category);
    }
    return std::make_shared<KeywordSafetyClient>(std::move(violence), std::move(hate),
                                                 std::move(sexual), std::move(intervention));
}

SafetyScores KeywordSafetyClient::assess(const std::string& text) {
    std::string lowered = ascii_lower(text);
    auto any_hit = [&](const std::set<std::string>& terms) {
        for (const auto& term : terms) {
            if (lowered.find(term) != std::string::npos) return true;
        }
        return false;
    };
    SafetyScores scores;
    scores.violence = any_hit(violence_) ? 0.9 : 0.0;
    scores.hate = any_hit(hate_) ? 0.9 : 0.0;
    scores.sexually_explicit = any_hit(sexual_) ? 0.9 : 0.0;
    scores.needs_intervention = any_hit(intervention_);
    scores.needs_caution =
        scores.needs_intervention || scores.violence > 0 || scores.hate > 0 || scores.sexually_explicit > 0;
    return scores;
}

FilterVerdict safety_filter(const Conversation& conversation, SafetyClient& client,
                            const FilterConfig& config) {
    SafetyScores scores = client.assess(serialize_conversation(conversation));
    if (scores.needs_intervention) {
        return FilterVerdict::fail(FilterStage::Safety, "NeedsIntervention");
    }
    auto over = [&](double v) { return v > config.toxicity_threshold; };
    if (over(scores.violence)) {
        return FilterVerdict::fail(FilterStage::Safety, "ToxicityThreshold",
                                   "violence=" + std::to_string(scores.violence));
    }
    if (over(scores.hate)) {
        return FilterVerdict::fail(FilterStage::Safety, "ToxicityThreshold",
                                   "hate=" + std::to_string(scores.hate));
    }
    if (over(scores.sexually_explicit)) {
        return FilterVerdict::fail(FilterStage::Safety, "ToxicityThreshold",
                                   "sexually_explicit=" + std::to_string(scores.sexually_explicit));
    }
    return FilterVerdict::pass(FilterStage::Safety);
}

// --------------------------------------------------------------------------
// Commonsense validation

PmiPrompts pmi_prompts(const std::string& context, const ValidationQuestion& question) {
    PmiPrompts prompts;
    prompts.full = context + "\nQ: " + question.text + "\nA:";
    prompts.null = "Q: " + question.text + "\nA:";
    return prompts;
}

McqAnswer pmi_mcq(const std::string& context, const ValidationQuestion& question,
                  GenBackend& backend, const FilterConfig& config) {
    if (!backend.supports_scoring()) {
        throw CapabilityError("commonsense filtering requires a scoring backend");
    }
    PmiPrompts prompts = pmi_prompts(context, question);

    McqAnswer answer;
    double best = 0.0;
    bool first = true;
    bool tie = false;
    for (const auto& choice : ValidationQuestion::choices()) {
        double full = backend.score(prompts.full, choice);
        double null = backend.score(prompts.null, choice);
        if (config.pmi_length_normalize) {
            double len = static_cast<double>(std::max<std::size_t>(tokenize_words(choice).size(), 1));
            full /= len;
            null /= len;
        }
        double pmi = full - null;
        answer.pmi[choice] = pmi;
        if (first || pmi > best) {
            best = pmi;
            answer.choice = mcq_choice_from_string(choice);
            tie = false;
            first = false;
        } else if (pmi == best) {
            tie = true;
        }
    }
    if (tie) answer.choice = McqChoice::unknown;
    return answer;
}

CommonsenseOutcome commonsense_filter(const Triple& triple, const NameMap& names,
                                      const Narrative& narrative, const Conversation& conversation,
                                      GenBackend& backend, const TemplateSet& templates,
                                      const FilterConfig& config) {
    ValidationQuestion head_q =
        build_validation_question(triple, names, QuestionKind::Head, templates);
    ValidationQuestion rt_q =
        build_validation_question(triple, names, QuestionKind::RelationTail, templates);

    CommonsenseOutcome outcome;
    outcome.head = pmi_mcq(narrative.text, head_q, backend, config);
    outcome.relation_tail = pmi_mcq(serialize_conversation(conversation), rt_q, backend, config);
    outcome.fully_encapsulating =
        outcome.head.choice == McqChoice::yes && outcome.relation_tail.choice == McqChoice::yes;

    if (outcome.head.choice != McqChoice::yes) {
        outcome.verdict = FilterVerdict::fail(FilterStage::Commonsense, "LacksHeadEvent",
                                              std::string(to_string(outcome.head.choice)));
    } else {
        outcome.verdict = FilterVerdict::pass(FilterStage::Commonsense);
    }
    return outcome;
}

// --------------------------------------------------------------------------
// Chain

FilterChainResult run_filter_chain(const Triple& triple, const NameMap& names,
                                   const Narrative& narrative, const Conversation& conversation,
                                   const FilterChainDeps& deps) {
    FilterChainResult result;
    auto record = [&](FilterVerdict verdict) {
        result.verdicts.push_back(verdict);
        if (!verdict.passed) result.rejection = std::move(verdict);
        return result.rejection.has_value();
    };

    if (record(basic_filter(conversation, deps.config))) return result;

    if (!deps.names || !deps.lexicon || !deps.probe_backend) {
        throw ConfigError("filter chain requires a name index, lexicon, and probe backend");
    }
    if (record(nonhuman_speaker_filter(conversation, *deps.names, *deps.lexicon,
                                       *deps.probe_backend))) {
        return result;
    }

    if (deps.safety) {
        if (record(safety_filter(conversation, *deps.safety, deps.config))) return result;
    } else {
        FilterVerdict skipped = FilterVerdict::pass(FilterStage::Safety);
        skipped.detail = "skipped: unsafe-skip-safety";
        result.verdicts.push_back(skipped);
        result.safety_skipped = true;
    }

    if (!deps.scoring_backend || !deps.templates) {
        throw ConfigError("filter chain requires a scoring backend and templates");
    }
    CommonsenseOutcome cs = commonsense_filter(triple, names, narrative, conversation,
                                               *deps.scoring_backend, *deps.templates, deps.config);
    result.head = cs.head;
    result.relation_tail = cs.relation_tail;
    result.fully_encapsulating = cs.fully_encapsulating;
    record(cs.verdict);
    return result;
}

}  // namespace convogen
