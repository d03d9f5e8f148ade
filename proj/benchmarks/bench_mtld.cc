#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "convogen/analytics.hpp"
#include "convogen/random.hpp"

namespace {

std::vector<std::string> synthetic_tokens(std::size_t n, std::size_t alphabet) {
    convogen::Rng rng(42);
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        tokens.push_back("w" + std::to_string(rng.uniform_index(alphabet)));
    }
    return tokens;
}

void BM_Mtld(benchmark::State& state) {
    auto tokens = synthetic_tokens(static_cast<std::size_t>(state.range(0)), 200);
    for (auto _ : state) {
        auto value = convogen::mtld(tokens);
        benchmark::DoNotOptimize(value);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Mtld)->Arg(1000)->Arg(10000)->Arg(100000);
