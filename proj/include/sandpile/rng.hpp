#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sandpile {

/// Seeded random stream. A (seed, stream) pair fully determines the sequence,
/// so replica i of an experiment always sees the same numbers regardless of
/// which thread runs it.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : seed_(seed), stream_(stream), engine_(mix(mix(seed) ^ stream)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1p-53; }

    /// Uniform on [lo, hi); returns lo when lo == hi.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform index in {0, ..., n-1} (Lemire's multiply-shift with rejection).
    std::size_t index(std::size_t n) {
        __extension__ using U128 = unsigned __int128;
        const std::uint64_t range = n;
        U128 product = static_cast<U128>(engine_()) * range;
        auto low = static_cast<std::uint64_t>(product);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                product = static_cast<U128>(engine_()) * range;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::size_t>(product >> 64);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    // splitmix64 finalizer: decorrelates nearby (seed, stream) pairs before
    // they reach the engine's own seeding routine.
    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace sandpile
