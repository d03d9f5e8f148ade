#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "convogen/distiller.hpp"
#include "convogen/filters.hpp"
#include "convogen/knowledge.hpp"
#include "convogen/templating.hpp"

namespace convogen {

struct EmotionAnnotation {
    std::string experiencer;  // PersonX's assigned name
    std::string emotion;      // the xReact tail
    std::string cause;        // the head event

    bool operator==(const EmotionAnnotation&) const = default;
};

struct McqAnnotation {
    McqAnswer head;
    McqAnswer relation_tail;
    bool fully_encapsulating = false;

    bool operator==(const McqAnnotation&) const = default;
};

struct RecordAnnotations {
    std::vector<FilterVerdict> verdicts;
    std::optional<McqAnnotation> mcq;
    std::optional<EmotionAnnotation> emotion;  // present when relation = xReact
    bool unsafe_skip_safety = false;           // watermark: safety was skipped
    bool past_tense_be_singular_default = false;
    std::map<std::string, std::string> notes;

    bool operator==(const RecordAnnotations&) const = default;

    bool all_passed() const;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string pipeline_version;
    std::string config_hash;
    std::map<std::string, std::string> prompt_hashes;     // stage -> cache key
    std::map<std::string, std::string> name_mitigation;   // old -> new

    bool operator==(const Provenance&) const = default;
};

// Full provenance chain for one seed triple. Fields fill in as the record
// moves through the stages; a record entering the final dataset must be
// complete and have every verdict passed.
struct DialogueRecord {
    Triple triple;
    NameMap name_map;
    SentenceForm sentence_form;
    std::optional<Narrative> narrative;
    std::optional<SpeakerPair> speakers;
    std::optional<std::string> raw_conversation;  // distill artifact; dropped at mitigation
    std::optional<Conversation> conversation;
    RecordAnnotations annotations;
    Provenance provenance;

    bool operator==(const DialogueRecord&) const = default;

    bool complete() const { return narrative && speakers && conversation; }
};

}  // namespace convogen
