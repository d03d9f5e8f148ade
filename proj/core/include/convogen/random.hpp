#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "convogen/hash.hpp"

namespace convogen {

// Deterministic RNG wrapper. mt19937_64 output is pinned by the standard and
// the derived draws below avoid the implementation-defined std:: distributions,
// so identical seeds give identical byte streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased uniform index in [0, n) via rejection sampling.
    std::size_t uniform_index(std::size_t n);

    // Stable per-record seed: mixes a label (e.g. "names:" + triple id) into
    // the run seed so worker scheduling cannot perturb any record's draws.
    static std::uint64_t derive(std::uint64_t seed, std::string_view label);

private:
    std::mt19937_64 engine_;
};

}  // namespace convogen
