#pragma once

#include <cstdint>
#include <random>

namespace giph {

/// Deterministic random source used wherever the library needs randomness.
///
/// std::mt19937_64 supplies the raw stream; doubles are derived from the top
/// 53 bits directly because std::uniform_real_distribution is not guaranteed
/// to produce identical sequences across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int int_range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

private:
    std::mt19937_64 gen_;
};

}  // namespace giph
