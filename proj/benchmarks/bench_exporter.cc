#include <benchmark/benchmark.h>

#include "convogen/exporter.hpp"
#include "convogen/random.hpp"

namespace {

convogen::DialogueRecord synthetic_record(int turns) {
    convogen::DialogueRecord record;
    record.triple = {"e1", "PersonX hums a tune", convogen::Relation::xReact, "calm"};
    record.name_map.x = "Ana";
    record.sentence_form = {"Ana hums a tune. Now Ana feels calm.", "e1", record.name_map};
    record.narrative = convogen::Narrative{"Ana hummed through the afternoon chores.", 1};
    record.speakers = convogen::SpeakerPair{"Ana", "Bo"};
    convogen::Conversation conv;
    for (int t = 0; t < turns; ++t) {
        conv.turns.push_back({t % 2 ? "Bo" : "Ana",
                              "A reasonably sized utterance with some words in it, number " +
                                  std::to_string(t) + "."});
    }
    conv.speakers = {"Ana", "Bo"};
    record.conversation = conv;
    return record;
}

void BM_BuildExamples(benchmark::State& state) {
    auto record = synthetic_record(static_cast<int>(state.range(0)));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        convogen::Rng rng(seed++);
        auto examples = convogen::build_examples(record, rng);
        benchmark::DoNotOptimize(examples);
    }
    state.SetItemsProcessed(state.iterations() * (state.range(0) - 1));
}

}  // namespace

BENCHMARK(BM_BuildExamples)->Arg(8)->Arg(20);
