#pragma once

#include <cstdint>
#include <vector>

namespace phyto {

// Deterministic PRNG with a fixed cross-platform sequence. std::mt19937 plus
// the standard distributions would tie outputs to the standard library
// implementation, which breaks byte-identical reruns between toolchains.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [lo, hi], rejection-sampled so the mapping is exact.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return next();  // full range
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
        std::uint64_t x = next();
        while (x >= limit) x = next();
        return lo + x % span;
    }

    // Uniform double in [0, 1) with 53 bits of entropy.
    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            const std::size_t j = std::size_t(uniform(0, i));
            using std::swap;
            swap(items[i], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace phyto
