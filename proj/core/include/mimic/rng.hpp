#pragma once

#include <cstdint>
#include <random>

namespace mimic {

/// Seeded RNG with platform-stable uniform draws. std::mt19937_64 output is
/// specified by the standard; the derived doubles avoid std::uniform_real_distribution,
/// whose mapping is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is negligible for the small n used here
        return engine_() % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace mimic
