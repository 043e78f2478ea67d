#pragma once

#include <cstdint>
#include <string_view>

namespace traceforest {

// Deterministic 64-bit generator (splitmix64). The standard <random>
// distributions are implementation-defined, so all sampling used by the
// toolkit goes through this class to keep results identical across
// platforms, standard libraries, and thread counts.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). Rejection sampling, bias-free.
    std::uint64_t next_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Uniform double in (-1, 1).
    double next_sym() { return 2.0 * next_unit() - 1.0; }

    // Independent child stream keyed by an integer (e.g. a tree index).
    Rng derive(std::uint64_t key) const {
        Rng mixer(state_ ^ (0x517cc1b727220a95ULL * (key + 1)));
        return Rng(mixer.next_u64());
    }

private:
    std::uint64_t state_;
};

// FNV-1a over a byte string; used for schema fingerprints and for keying
// stage seeds off a master seed by stage name.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stage seed derivation: one master seed fans out to per-stage seeds so any
// stage can be re-run in isolation and reproduce the pipeline's behavior.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) {
    Rng mixer(master ^ fnv1a64(stage));
    return mixer.next_u64();
}

} // namespace traceforest
