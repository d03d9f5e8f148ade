#pragma once

#include <string>
#include <vector>

#include "convogen/genbackend.hpp"
#include "convogen/result.hpp"
#include "convogen/templating.hpp"

namespace convogen {

struct Narrative {
    std::string text;
    int sentence_count = 0;

    bool operator==(const Narrative&) const = default;
};

struct SpeakerPair {
    std::string x_speaker;      // PersonX's assigned name
    std::string other_speaker;  // inferred interlocutor ("her coach", a name, ...)

    bool operator==(const SpeakerPair&) const = default;
};

struct Turn {
    std::string speaker;
    std::string utterance;

    bool operator==(const Turn&) const = default;
};

struct Conversation {
    std::vector<Turn> turns;
    std::vector<std::string> speakers;  // distinct, in order of first appearance

    bool operator==(const Conversation&) const = default;
};

// Narrative sentence-count bounds: soft target is 2-3 sentences, anything
// outside [1, 4] is a stage rejection.
inline constexpr int kNarrativeMinSentences = 1;
inline constexpr int kNarrativeMaxSentences = 4;

// Prompt builders are exposed so tests and cache tooling can address the
// exact bytes sent to the backend.
std::string narrative_prompt(const SentenceForm& sf);
std::string speaker_prompt(const Narrative& narrative, const std::string& x_name);
std::string conversation_prompt(const Narrative& narrative, const SpeakerPair& speakers);
std::string nonhuman_probe_prompt(const std::string& speaker_prefix);

// Stage 1: sentence form -> short narrative.
// Rejections: EmptyNarrative, TooLong, BackendErrorCompletion.
Result<Narrative> generate_narrative(const SentenceForm& sf, GenBackend& backend,
                                     const GenParams& params);

// Stage 2: narrative -> other interlocutor. The completion is truncated at
// the first newline or terminal punctuation, then leading articles are
// stripped. Rejections: EmptySpeaker, SameSpeaker, BackendErrorCompletion.
Result<SpeakerPair> infer_speakers(const Narrative& narrative, const std::string& x_name,
                                   GenBackend& backend, const GenParams& params);

// Stage 3: narrative + speakers -> raw multi-turn conversation text.
// Rejection: EmptyConversation, BackendErrorCompletion.
Result<std::string> generate_conversation(const Narrative& narrative, const SpeakerPair& speakers,
                                          GenBackend& backend, const GenParams& params);

// Line-walking parser. A line "Prefix: rest" opens a turn; continuation lines
// append to the current utterance; consecutive turns by the same speaker are
// merged. Prefixes outside the known pair register as additional speakers
// (the speaker-count filter decides their fate).
//
// When implicit_first_prefix is set (pipeline use), the raw text is treated
// as continuing x_speaker's first utterance, matching the prompt shape.
// Otherwise a non-empty line before any prefix fails with PrefixOmission.
Result<Conversation> parse_conversation(const std::string& raw, const SpeakerPair& speakers,
                                        bool implicit_first_prefix = true);

// Inverse of parsing: "speaker: utterance" lines. Round-trips through
// parse_conversation with implicit_first_prefix = false.
std::string serialize_conversation(const Conversation& conversation);

}  // namespace convogen
