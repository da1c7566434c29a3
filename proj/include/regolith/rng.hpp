#pragma once

#include <cstdint>
#include <initializer_list>

namespace regolith {

// Deterministic, platform-independent pseudo-random primitives. The standard
// library engines are reproducible but <random> distributions are not
// specified bit-exactly across implementations, so all draws here go through
// these fixed-arithmetic helpers.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-independent key mixing for counter-based draws.
inline uint64_t mix_key(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x8f1bbcdcbfa53e0bULL;
    for (uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

inline double to_unit_double(uint64_t bits) {
    // 53-bit mantissa -> [0, 1)
    return double(bits >> 11) * 0x1.0p-53;
}

// Stateless draw: uniform in [-1, 1], a pure function of the key parts.
inline double lattice_uniform_pm1(uint64_t seed, int64_t i, int64_t j) {
    const uint64_t h = mix_key({seed, uint64_t(i), uint64_t(j)});
    return to_unit_double(h) * 2.0 - 1.0;
}

// Small sequential stream seeded from a key; splitmix64 as the generator.
class RandomStream {
public:
    explicit RandomStream(uint64_t key) : state_(splitmix64(key ^ 0x6a09e667f3bcc909ULL)) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1).
    double uniform01() { return to_unit_double(next_u64()); }

    // Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

private:
    uint64_t state_;
};

} // namespace regolith
