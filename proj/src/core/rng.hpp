// rng.hpp: portable deterministic random numbers.
//
// The generator is splitmix64: a 64-bit counter advanced by the constant
// 0x9E3779B97F4A7C15, whose output is the finalizer
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27;  z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
// Substream s of seed q starts at state mix(mix(q) ^ (s + 0x9E3779B97F4A7C15)).
// All derived values (uniforms, gaussians, bounded ints) use only integer and
// IEEE-754 double arithmetic, so sequences are bit-identical across platforms.
#pragma once

#include <cstdint>

namespace pairloc {

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    /// Decorrelated substream: hashes (seed, stream_id) into a fresh state.
    static Rng stream(uint64_t seed, uint64_t stream_id) {
        return Rng(mix(mix(seed) ^ (stream_id + kGolden)));
    }

    uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Zero-mean unit-variance deviate: sum of 12 uniforms minus 6
    /// (Irwin-Hall). Bounded to [-6, 6]; libm-free so dataset generation is
    /// reproducible across platforms.
    double next_gaussian() {
        double s = 0.0;
        for (int n = 0; n < 12; ++n) s += next_unit();
        return s - 6.0;
    }

    /// Uniform integer in [0, n), n >= 1. Fixed-point multiply, no rejection.
    uint32_t next_below(uint32_t n) {
        return uint32_t((uint64_t(uint32_t(next_u64() >> 32)) * n) >> 32);
    }

private:
    static constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

    static uint64_t mix(uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    uint64_t state_;
};

}  // namespace pairloc
