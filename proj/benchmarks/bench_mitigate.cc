#include <benchmark/benchmark.h>

#include "convogen/curation.hpp"
#include "convogen/random.hpp"

namespace {

convogen::DialogueRecord synthetic_record(int turns) {
    convogen::DialogueRecord record;
    record.triple = {"b1", "PersonX waters the garden", convogen::Relation::xWant, "to rest"};
    record.name_map.x = "Madeleine";
    record.sentence_form = {"Madeleine waters the garden. Now Madeleine wants to rest.", "b1",
                            record.name_map};
    record.narrative = convogen::Narrative{
        "Madeleine watered every bed before noon while Riley watched from the porch.", 1};
    record.speakers = convogen::SpeakerPair{"Madeleine", "Riley"};
    convogen::Conversation conv;
    for (int t = 0; t < turns; ++t) {
        conv.turns.push_back({t % 2 ? "Riley" : "Madeleine",
                              "Madeleine said the garden rows would take Madeleine all afternoon, "
                              "turn " + std::to_string(t) + "."});
    }
    conv.speakers = {"Madeleine", "Riley"};
    record.conversation = conv;
    return record;
}

convogen::NamePool synthetic_pool(std::size_t n) {
    convogen::NamePool pool;
    for (std::size_t i = 0; i < n; ++i) pool.names.push_back("Name" + std::to_string(i));
    pool.names.push_back("Madeleine");
    pool.names.push_back("Riley");
    pool.size_class = convogen::NamePool::SizeClass::Top10K;
    return pool;
}

void BM_MitigateNames(benchmark::State& state) {
    auto record = synthetic_record(static_cast<int>(state.range(0)));
    auto pool = synthetic_pool(10000);
    convogen::NameMitigator mitigator(pool);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        convogen::Rng rng(seed++);
        auto out = mitigator.apply(record, rng);
        benchmark::DoNotOptimize(out);
    }
    state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_MitigateNames)->Arg(8)->Arg(20);
