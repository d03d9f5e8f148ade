#include <doctest.h>

#include <algorithm>

#include "convogen/errors.hpp"
#include "convogen/exporter.hpp"
#include "test_util.hpp"

using namespace convogen;

namespace {

DialogueRecord record_with_turns(const std::vector<std::pair<std::string, std::string>>& turns) {
    DialogueRecord r;
    r.triple = Triple{"e1", "PersonX moves a step closer to the goal", Relation::xNeed,
                      "to take the first step"};
    r.name_map.x = "Madeleine";
    r.sentence_form = SentenceForm{"Madeleine took the first step.", "e1", r.name_map};
    r.narrative = Narrative{"Madeleine took the first step towards her goal.", 1};
    r.speakers = SpeakerPair{"Madeleine", "her coach"};
    Conversation conv;
    for (const auto& [speaker, utterance] : turns) conv.turns.push_back(Turn{speaker, utterance});
    for (const auto& turn : conv.turns) {
        if (std::find(conv.speakers.begin(), conv.speakers.end(), turn.speaker) ==
            conv.speakers.end()) {
            conv.speakers.push_back(turn.speaker);
        }
    }
    r.conversation = conv;
    return r;
}

DialogueRecord six_turns() {
    return record_with_turns({{"Madeleine", "u0"},
                              {"Coach", "u1"},
                              {"Madeleine", "u2"},
                              {"Coach", "u3"},
                              {"Madeleine", "u4"},
                              {"Coach", "u5"}});
}

}  // namespace

TEST_CASE("instruction goldens for both responders") {
    SpeakerPair speakers{"Madeleine", "her coach"};
    CHECK(build_instruction(speakers, Responder::x) ==
          "Imagine you are Madeleine and speak to her coach");
    CHECK(build_instruction(speakers, Responder::other) ==
          "Imagine you are her coach and speak to Madeleine");
}

TEST_CASE("a six-turn conversation yields five examples") {
    Rng rng(1);
    auto examples = build_examples(six_turns(), rng);
    CHECK(examples.size() == 5);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        CHECK(examples[i].meta.turn_index == static_cast<int>(i + 1));
        CHECK(examples[i].meta.record_id == "e1");
        CHECK(examples[i].meta.dropout_mode == "per_example");
    }
}

TEST_CASE("keep-both input format matches the separator layout") {
    ExportConfig config;
    config.p_drop_narrative = 0.0;  // force keep
    config.p_drop_instruction = 0.0;
    Rng rng(5);
    auto examples = build_examples(six_turns(), rng, config);

    // example for t=2: responder is Madeleine (turn 2), context is u0 <TURN> u1
    const TrainingExample& ex = examples[1];
    CHECK(ex.input ==
          "Madeleine took the first step towards her goal. <SEP> "
          "Imagine you are Madeleine and speak to her coach <SEP> u0 <TURN> u1");
    CHECK(ex.target == "u2");
    CHECK_FALSE(ex.meta.narrative_dropped);
    CHECK_FALSE(ex.meta.instruction_dropped);

    // responder swaps with the target speaker
    CHECK(examples[0].input.find("Imagine you are her coach and speak to Madeleine") !=
          std::string::npos);
    CHECK(examples[0].target == "u1");
}

TEST_CASE("dropping both components leaves the bare context") {
    ExportConfig config;
    config.p_drop_narrative = 1.0;
    config.p_drop_instruction = 1.0;
    Rng rng(5);
    auto examples = build_examples(six_turns(), rng, config);
    CHECK(examples[1].input == "u0 <TURN> u1");
    CHECK(examples[0].input == "u0");  // first example: single-utterance context
    for (const auto& ex : examples) {
        CHECK(ex.meta.narrative_dropped);
        CHECK(ex.meta.instruction_dropped);
        CHECK(ex.input.find("<SEP>") == std::string::npos);
        CHECK(ex.input.rfind("u0", 0) == 0);  // no leading separator
    }
}

TEST_CASE("custom separators are honored") {
    ExportConfig config;
    config.separator = "[SEP]";
    config.turn_indicator = "[T]";
    config.p_drop_narrative = 0.0;
    config.p_drop_instruction = 1.0;
    Rng rng(5);
    auto examples = build_examples(six_turns(), rng, config);
    CHECK(examples[1].input ==
          "Madeleine took the first step towards her goal. [SEP] u0 [T] u1");
}

TEST_CASE("targets never leak into inputs") {
    Rng seed_rng(909);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::pair<std::string, std::string>> turns;
        std::size_t n = 2 + seed_rng.uniform_index(9);
        for (std::size_t t = 0; t < n; ++t) {
            // distinct, non-overlapping utterances
            turns.push_back({t % 2 ? "Coach" : "Madeleine",
                             "utt_" + std::to_string(trial) + "_" + std::to_string(t) + "_end"});
        }
        Rng rng(seed_rng.next());
        for (const auto& ex : build_examples(record_with_turns(turns), rng)) {
            CHECK(ex.input.find(ex.target) == std::string::npos);
        }
    }
}

TEST_CASE("example generation is a pure function of record and seed") {
    Rng a(777);
    Rng b(777);
    auto ex1 = build_examples(six_turns(), a);
    auto ex2 = build_examples(six_turns(), b);
    CHECK(ex1 == ex2);

    Rng c(778);
    auto ex3 = build_examples(six_turns(), c);
    bool any_flag_differs = false;
    for (std::size_t i = 0; i < ex3.size(); ++i) {
        if (ex3[i].meta.narrative_dropped != ex1[i].meta.narrative_dropped ||
            ex3[i].meta.instruction_dropped != ex1[i].meta.instruction_dropped) {
            any_flag_differs = true;
        }
    }
    // different seeds may legitimately coincide, but inputs must stay well-formed
    for (const auto& ex : ex3) CHECK_FALSE(ex.target.empty());
    (void)any_flag_differs;
}

TEST_CASE("export rejects records that cannot produce examples") {
    Rng rng(1);
    DialogueRecord single = record_with_turns({{"Madeleine", "only"}});
    CHECK_THROWS_AS(build_examples(single, rng), DataError);

    DialogueRecord incomplete = six_turns();
    incomplete.narrative.reset();
    CHECK_THROWS_AS(build_examples(incomplete, rng), DataError);
}

TEST_CASE("external dialogues adapt into exportable records") {
    ExternalDialogue dialogue;
    dialogue.id = "ext1";
    dialogue.situation = "Speaker is trying to gently convince a friend to return a borrowed book.";
    dialogue.turns = {{"Speaker", "You still have my copy, right?"},
                      {"Listener", "I do. Speaker, I'm so sorry, I completely forgot."},
                      {"Speaker", "No harm done, just bring it Friday."},
                      {"Listener", "Deal."}};

    NamePool pool;
    pool.names = {"Ana", "Bo", "Cara", "Dean"};
    Rng rng(12);
    DialogueRecord record = adapt_external_dialogue(dialogue, pool, rng);

    REQUIRE(record.complete());
    CHECK(record.speakers->x_speaker != record.speakers->other_speaker);
    CHECK(pool.contains(record.speakers->x_speaker));

    // role tokens renamed consistently in the situation and utterances
    CHECK(record.narrative->text.find("Speaker") == std::string::npos);
    CHECK(record.narrative->text.find(record.speakers->x_speaker) != std::string::npos);
    CHECK(record.conversation->turns[1].utterance.find("Speaker") == std::string::npos);
    CHECK(record.conversation->turns[1].utterance.find(record.speakers->x_speaker) !=
          std::string::npos);
    CHECK(record.annotations.notes.at("adapted_from") == "external");

    // deterministic and exportable
    Rng rng2(12);
    CHECK(adapt_external_dialogue(dialogue, pool, rng2) == record);
    Rng export_rng(5);
    CHECK(build_examples(record, export_rng).size() == 3);

    ExternalDialogue monologue{"ext2", "Someone talks alone.", {{"Speaker", "hello"},
                                                                {"Speaker", "again"}}};
    Rng rng3(1);
    CHECK_THROWS_AS(adapt_external_dialogue(monologue, pool, rng3), DataError);
}
