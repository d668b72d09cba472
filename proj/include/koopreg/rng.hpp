#pragma once

#include <cstdint>
#include <optional>

namespace koopreg {

/// Counter-based 64-bit generator: draw k is the SplitMix64 finalizer applied
/// to seed + k * golden-gamma. Output depends only on (seed, k), so streams
/// are reproducible on every platform and can be split by seed derivation.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (platform independent, unlike
    /// std::normal_distribution).
    double normal();

    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic child seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace koopreg
