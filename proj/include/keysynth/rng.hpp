#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace keysynth {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
    // FNV-1a, 64 bit
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Mixes a base seed with a label and up to three indices. Used to derive
// independent child streams (per grid cell, per network, per tree) so that
// parallel or reordered execution cannot change what anything draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t a = 0, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t state = base ^ hash_label(label);
    splitmix64(state);
    state ^= a;
    splitmix64(state);
    state ^= b;
    splitmix64(state);
    state ^= c;
    return splitmix64(state);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(scramble(seed)) {}

    std::mt19937_64& engine() { return eng_; }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }

    // standard normal; scale/shift at the call site
    double normal() {
        return std::normal_distribution<double>(0.0, 1.0)(eng_);
    }

    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
    }

    std::uint64_t next_u64() { return eng_(); }

private:
    static std::uint64_t scramble(std::uint64_t s) {
        std::uint64_t state = s;
        return splitmix64(state);
    }
    std::mt19937_64 eng_;
};

inline Rng derive_rng(std::uint64_t base, std::string_view label,
                      std::uint64_t a = 0, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
    return Rng(derive_seed(base, label, a, b, c));
}

} // namespace keysynth
