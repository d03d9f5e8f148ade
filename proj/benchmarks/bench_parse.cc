#include <benchmark/benchmark.h>

#include <string>

#include "convogen/distiller.hpp"

namespace {

std::string synthetic_raw(int turns) {
    std::string raw = " Opening line of the conversation goes here.";
    for (int i = 1; i < turns; ++i) {
        raw += i % 2 ? "\nBo: A reply with a little bit of texture, number " + std::to_string(i) + "."
                     : "\nAna: Another turn of phrase, number " + std::to_string(i) + ".";
    }
    return raw;
}

void BM_ParseConversation(benchmark::State& state) {
    std::string raw = synthetic_raw(static_cast<int>(state.range(0)));
    convogen::SpeakerPair speakers{"Ana", "Bo"};
    for (auto _ : state) {
        auto parsed = convogen::parse_conversation(raw, speakers);
        benchmark::DoNotOptimize(parsed);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_ParseConversation)->Arg(8)->Arg(20)->Arg(200);
