#include "convogen/distiller.hpp"

#include <algorithm>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

namespace {

// Longest plausible speaker prefix; longer colon-bearing lines are treated as
// utterance text.
constexpr std::size_t kMaxPrefixLength = 40;

std::string strip_leading_article(const std::string& s) {
    for (const char* article : {"the ", "a ", "an "}) {
        if (starts_with_ci(s, article)) return trim(s.substr(std::string(article).size()));
    }
    return s;
}

bool plausible_prefix(const std::string& candidate) {
    if (candidate.empty() || candidate.size() > kMaxPrefixLength) return false;
    if (candidate.find('?') != std::string::npos || candidate.find('!') != std::string::npos) {
        return false;
    }
    // Periods are allowed only as title abbreviations ("Dr. Lee", "Mrs. Kim"):
    // a run of at most four letters before the dot. Anything longer means the
    // colon belongs to sentence text, not a speaker prefix.
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        if (candidate[i] != '.') continue;
        std::size_t run = 0;
        while (run < i && std::isalpha(static_cast<unsigned char>(candidate[i - run - 1]))) ++run;
        if (run == 0 || run > 4) return false;
    }
    return true;
}

void append_utterance(std::string& utterance, const std::string& fragment) {
    std::string t = trim(fragment);
    if (t.empty()) return;
    if (!utterance.empty()) utterance += " ";
    utterance += t;
}

}  // namespace

std::string narrative_prompt(const SentenceForm& sf) {
    return sf.text + " Rewrite this story with more specific details in two or three sentences:";
}

std::string speaker_prompt(const Narrative& narrative, const std::string& x_name) {
    return narrative.text + " The following is a conversation in the scene between " + x_name +
           " and";
}

std::string conversation_prompt(const Narrative& narrative, const SpeakerPair& speakers) {
    return narrative.text + " The following is a long in-depth conversation happening in the scene between " +
           speakers.x_speaker + " and " + speakers.other_speaker + " with multiple turns.\n" +
           speakers.x_speaker + ":";
}

std::string nonhuman_probe_prompt(const std::string& speaker_prefix) {
    return "Q: Is " + speaker_prefix + " a person?\nA:";
}

Result<Narrative> generate_narrative(const SentenceForm& sf, GenBackend& backend,
                                     const GenParams& params) {
    Completion c = backend.complete(narrative_prompt(sf), params);
    if (c.finish_reason == FinishReason::error) {
        return Result<Narrative>::failure("BackendErrorCompletion", c.diagnostic);
    }
    std::string text = trim(c.text);
    if (text.empty()) return Result<Narrative>::failure("EmptyNarrative");

    Narrative n;
    n.text = std::move(text);
    n.sentence_count = count_sentences(n.text);
    if (n.sentence_count < kNarrativeMinSentences) {
        return Result<Narrative>::failure("EmptyNarrative");
    }
    if (n.sentence_count > kNarrativeMaxSentences) {
        return Result<Narrative>::failure("TooLong", std::to_string(n.sentence_count) + " sentences");
    }
    return Result<Narrative>::success(std::move(n));
}

Result<SpeakerPair> infer_speakers(const Narrative& narrative, const std::string& x_name,
                                   GenBackend& backend, const GenParams& params) {
    Completion c = backend.complete(speaker_prompt(narrative, x_name), params);
    if (c.finish_reason == FinishReason::error) {
        return Result<SpeakerPair>::failure("BackendErrorCompletion", c.diagnostic);
    }

    std::string other = c.text;
    std::size_t cut = other.find_first_of("\n.?!");
    if (cut != std::string::npos) other = other.substr(0, cut);
    other = strip_leading_article(trim(other));

    if (other.empty()) return Result<SpeakerPair>::failure("EmptySpeaker");
    if (ascii_lower(other) == ascii_lower(x_name)) {
        return Result<SpeakerPair>::failure("SameSpeaker", other);
    }
    return Result<SpeakerPair>::success(SpeakerPair{x_name, other});
}

Result<std::string> generate_conversation(const Narrative& narrative, const SpeakerPair& speakers,
                                          GenBackend& backend, const GenParams& params) {
    Completion c = backend.complete(conversation_prompt(narrative, speakers), params);
    if (c.finish_reason == FinishReason::error) {
        return Result<std::string>::failure("BackendErrorCompletion", c.diagnostic);
    }
    if (trim(c.text).empty()) return Result<std::string>::failure("EmptyConversation");
    return Result<std::string>::success(c.text);
}

Result<Conversation> parse_conversation(const std::string& raw, const SpeakerPair& speakers,
                                        bool implicit_first_prefix) {
    if (trim(raw).empty()) return Result<Conversation>::failure("EmptyConversation");

    std::vector<Turn> turns;
    std::string current_speaker;
    std::string current_utterance;
    bool in_turn = false;

    if (implicit_first_prefix) {
        current_speaker = speakers.x_speaker;
        in_turn = true;
    }

    auto flush = [&]() {
        if (!in_turn) return;
        std::string utterance = trim(current_utterance);
        if (!utterance.empty()) {
            if (!turns.empty() && turns.back().speaker == current_speaker) {
                append_utterance(turns.back().utterance, utterance);
            } else {
                turns.push_back(Turn{current_speaker, std::move(utterance)});
            }
        }
        current_utterance.clear();
    };

    for (const std::string& line : split_lines(raw)) {
        std::string content = trim(line);
        if (content.empty()) continue;

        std::size_t colon = content.find(':');
        std::string prefix =
            colon == std::string::npos ? std::string() : trim(content.substr(0, colon));
        if (colon != std::string::npos && plausible_prefix(prefix)) {
            flush();
            current_speaker = prefix;
            current_utterance = trim(content.substr(colon + 1));
            in_turn = true;
        } else {
            if (!in_turn) {
                return Result<Conversation>::failure("PrefixOmission",
                                                     "utterance text before any speaker prefix");
            }
            append_utterance(current_utterance, content);
        }
    }
    flush();

    if (turns.empty()) return Result<Conversation>::failure("EmptyConversation");

    Conversation conv;
    conv.turns = std::move(turns);
    for (const auto& turn : conv.turns) {
        if (std::find(conv.speakers.begin(), conv.speakers.end(), turn.speaker) ==
            conv.speakers.end()) {
            conv.speakers.push_back(turn.speaker);
        }
    }
    return Result<Conversation>::success(std::move(conv));
}

std::string serialize_conversation(const Conversation& conversation) {
    std::string out;
    for (std::size_t i = 0; i < conversation.turns.size(); ++i) {
        if (i > 0) out += "\n";
        out += conversation.turns[i].speaker + ": " + conversation.turns[i].utterance;
    }
    return out;
}

}  // namespace convogen
