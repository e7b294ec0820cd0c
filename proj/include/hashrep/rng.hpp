#pragma once

#include <cstdint>

#include "hashrep/bytes.hpp"

namespace hashrep {

// splitmix64. Scenario replay depends on byte-identical sequences across
// platforms, so no std::uniform_int_distribution anywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Unbiased value in [0, bound) via rejection.
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    bool chance(uint32_t numer, uint32_t denom) { return below(denom) < numer; }

    void fill(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t v = next();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i) out[i] = static_cast<uint8_t>(v >> (8 * b));
        }
    }

    template <size_t N>
    std::array<uint8_t, N> bytes() {
        std::array<uint8_t, N> out{};
        fill(std::span(out));
        return out;
    }

private:
    uint64_t state_;
};

}  // namespace hashrep
