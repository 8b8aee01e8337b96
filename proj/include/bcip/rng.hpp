#pragma once

#include <cstdint>
#include <random>

namespace bcip {

/// splitmix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a stream index:
/// mix(a, b) = splitmix64(splitmix64(a) ^ (b * 0xD1B54A32D192ED03)).
/// Every parallel unit (patient, tree, repetition) seeds its own stream with
/// this, so output never depends on scheduling.
constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL));
}

/// Seeded stream. Bounded draws use rejection sampling on the raw engine
/// output so results are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return lo + static_cast<int>(x % span);
    }

    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<int>(n) - 1)); }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            auto j = uniform_int(0, static_cast<int>(i));
            std::iter_swap(first + i, first + j);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace bcip
