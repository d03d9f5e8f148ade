#pragma once

#include <string>
#include <vector>

#include "convogen/random.hpp"
#include "convogen/record.hpp"

namespace convogen {

struct ExportConfig {
    std::string separator = "<SEP>";
    std::string turn_indicator = "<TURN>";
    double p_drop_narrative = 0.3;
    double p_drop_instruction = 0.5;
};

struct TrainingExampleMeta {
    std::string record_id;
    int turn_index = 0;
    bool narrative_dropped = false;
    bool instruction_dropped = false;
    std::string dropout_mode = "per_example";

    bool operator==(const TrainingExampleMeta&) const = default;
};

// Flattened seq2seq pair: input = narrative <SEP> instruction <SEP> context,
// dropped components removed along with their separator; the target is the
// response utterance verbatim.
struct TrainingExample {
    std::string input;
    std::string target;
    TrainingExampleMeta meta;

    bool operator==(const TrainingExample&) const = default;
};

enum class Responder { x, other };

// "Imagine you are <responder> and speak to <other>", possessive phrasing
// preserved from the speaker strings.
std::string build_instruction(const SpeakerPair& speakers, Responder responder);

// One example per turn t >= 1: target = turn t, context = turns 0..t-1 joined
// with the turn indicator. Narrative and instruction are dropped independently
// per example with the configured probabilities; deterministic under the rng.
// Both speakers are targeted; the instruction names the responding side.
std::vector<TrainingExample> build_examples(const DialogueRecord& record, Rng& rng,
                                            const ExportConfig& config = {});

// ---------------------------------------------------------------------------
// External-corpus adapter

struct ExternalTurn {
    std::string role;  // e.g. "Speaker", "Listener"
    std::string utterance;
};

struct ExternalDialogue {
    std::string id;
    std::string situation;  // free-text description; may mention the roles
    std::vector<ExternalTurn> turns;
};

// Adapts a role-based external dialogue into the record shape the exporter
// consumes: each distinct role draws a sampled name, the situation becomes
// the narrative, and role tokens are renamed consistently across all text.
// Adapted records carry a synthesized marker triple and are meant for the
// training-example path, not for the filter chain.
DialogueRecord adapt_external_dialogue(const ExternalDialogue& dialogue, const NamePool& pool,
                                       Rng& rng);

}  // namespace convogen
