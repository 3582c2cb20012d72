#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (seed, index, slot), so ensembles do not depend on generation order.

#include <cstdint>
#include <initializer_list>

namespace dyncon {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive 64-bit mixing hash of a key sequence.
constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
    return h;
}

/// Maps 64 random bits to a double in [0, 1) using the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t slot) const noexcept {
        return mix_seed({seed_, index, slot});
    }
    constexpr double unit(std::uint64_t index, std::uint64_t slot) const noexcept {
        return to_unit(bits(index, slot));
    }
    constexpr double uniform(double lo, double hi, std::uint64_t index, std::uint64_t slot) const noexcept {
        return lo + (hi - lo) * unit(index, slot);
    }
    constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// Sequential stream for bulk Monte Carlo; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr double unit() noexcept { return to_unit((*this)()); }
    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * unit(); }

private:
    std::uint64_t state_;
};

}  // namespace dyncon
