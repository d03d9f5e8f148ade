#include "convogen/exporter.hpp"

#include <algorithm>
#include <map>

#include "convogen/errors.hpp"
#include "convogen/text.hpp"

namespace convogen {

std::string build_instruction(const SpeakerPair& speakers, Responder responder) {
    const std::string& self = responder == Responder::x ? speakers.x_speaker : speakers.other_speaker;
    const std::string& other = responder == Responder::x ? speakers.other_speaker : speakers.x_speaker;
    return "Imagine you are " + self + " and speak to " + other;
}

std::vector<TrainingExample> build_examples(const DialogueRecord& record, Rng& rng,
                                            const ExportConfig& config) {
    if (!record.complete()) throw DataError("cannot export incomplete record " + record.triple.id);
    const Conversation& conversation = *record.conversation;
    if (conversation.turns.size() < 2) {
        throw DataError("record " + record.triple.id + " has fewer than two turns");
    }

    std::vector<TrainingExample> examples;
    examples.reserve(conversation.turns.size() - 1);

    for (std::size_t t = 1; t < conversation.turns.size(); ++t) {
        const Turn& target_turn = conversation.turns[t];
        Responder responder = target_turn.speaker == record.speakers->x_speaker
                                  ? Responder::x
                                  : Responder::other;

        bool drop_narrative = rng.bernoulli(config.p_drop_narrative);
        bool drop_instruction = rng.bernoulli(config.p_drop_instruction);

        std::string context;
        for (std::size_t k = 0; k < t; ++k) {
            if (k > 0) context += " " + config.turn_indicator + " ";
            context += conversation.turns[k].utterance;
        }

        std::string input;
        auto append_component = [&](const std::string& component) {
            if (!input.empty()) input += " " + config.separator + " ";
            input += component;
        };
        if (!drop_narrative) append_component(record.narrative->text);
        if (!drop_instruction) append_component(build_instruction(*record.speakers, responder));
        append_component(context);

        TrainingExample example;
        example.input = std::move(input);
        example.target = target_turn.utterance;
        example.meta.record_id = record.triple.id;
        example.meta.turn_index = static_cast<int>(t);
        example.meta.narrative_dropped = drop_narrative;
        example.meta.instruction_dropped = drop_instruction;
        examples.push_back(std::move(example));
    }
    return examples;
}

DialogueRecord adapt_external_dialogue(const ExternalDialogue& dialogue, const NamePool& pool,
                                       Rng& rng) {
    if (dialogue.turns.size() < 2) {
        throw DataError("external dialogue " + dialogue.id + " has fewer than two turns");
    }
    if (trim(dialogue.situation).empty()) {
        throw DataError("external dialogue " + dialogue.id + " lacks a situation description");
    }

    std::vector<std::string> roles;
    for (const auto& turn : dialogue.turns) {
        if (std::find(roles.begin(), roles.end(), turn.role) == roles.end()) {
            roles.push_back(turn.role);
        }
    }
    if (roles.size() < 2) {
        throw DataError("external dialogue " + dialogue.id + " needs two distinct roles");
    }
    if (pool.names.size() < roles.size()) {
        throw DataError("name pool too small for " + std::to_string(roles.size()) + " roles");
    }

    // distinct sampled name per role
    std::map<std::string, std::string> role_names;
    std::vector<std::string> candidates = pool.names;
    for (const auto& role : roles) {
        std::size_t pick = rng.uniform_index(candidates.size());
        role_names[role] = candidates[pick];
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    auto rename = [&](const std::string& text) { return replace_words(text, role_names); };

    DialogueRecord record;
    // marker triple: adapted records skip ingestion, so the triple only tags
    // provenance while keeping the head/tail shape valid
    record.triple = Triple{dialogue.id, "PersonX is in the situation described",
                           Relation::xAttr, "present"};
    record.name_map.x = role_names.at(roles[0]);
    record.name_map.y = role_names.at(roles[1]);
    record.narrative = Narrative{rename(trim(dialogue.situation)),
                                 count_sentences(dialogue.situation)};
    record.sentence_form = SentenceForm{record.narrative->text, dialogue.id, record.name_map};
    record.speakers = SpeakerPair{record.name_map.x, role_names.at(roles[1])};

    Conversation conv;
    for (const auto& turn : dialogue.turns) {
        conv.turns.push_back(Turn{role_names.at(turn.role), rename(turn.utterance)});
    }
    for (const auto& turn : conv.turns) {
        if (std::find(conv.speakers.begin(), conv.speakers.end(), turn.speaker) ==
            conv.speakers.end()) {
            conv.speakers.push_back(turn.speaker);
        }
    }
    record.conversation = std::move(conv);
    record.annotations.notes["adapted_from"] = "external";
    return record;
}

}  // namespace convogen
