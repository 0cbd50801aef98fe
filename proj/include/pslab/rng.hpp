#pragma once

#include <cstdint>

namespace pslab {

// Counter-based deterministic RNG. Every consumer derives its stream from
// (seed, iteration, stream id, item) so draws never depend on call order or
// on which code path ran before. splitmix64 finalizer as the mixer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x8f1bbcdcbfa53e0bULL)) {}
    Rng(std::uint64_t seed, std::uint64_t iter, std::uint64_t stream, std::uint64_t item = 0)
        : state_(mix64(mix64(mix64(mix64(seed) ^ iter) ^ (stream * 0x9e3779b97f4a7c15ULL)) ^
                       item)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Uniform integer in [lo, hi] inclusive.
    int range_int(int lo, int hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
};

// Stateless hash -> [0, 1), for procedural lattice noise.
inline double hash01(std::uint64_t seed, std::int64_t a, std::int64_t b, std::int64_t c = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(a) * 0xd6e8feb86659fd93ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(b) * 0xa5a31e8b7f67b3ddULL);
    h = mix64(h ^ static_cast<std::uint64_t>(c) * 0x2545f4914f6cdd1dULL);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace pslab
