#pragma once

#include <cstdint>
#include <random>

namespace sovrisk {

double normal_quantile(double p);  // stats.hpp

// Deterministic random stream. All draws are derived from raw mt19937_64
// output (never from std:: distributions, whose algorithms are
// implementation-defined), so a seed pins the stream bit-for-bit on any
// platform. Normal deviates use the inverse-CDF transform, matching the
// quantile-transform sampling used throughout the model.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); safe as the argument of an inverse CDF.
    double uniform_open() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return normal_quantile(uniform_open()); }

private:
    std::mt19937_64 gen_;
};

// Stream derivation conventions: Monte Carlo iteration i uses seed ^ i,
// bootstrap replicate r uses seed + r. Kept distinct so nested use cannot
// collide streams.
inline std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t index) {
    return seed ^ index;
}
inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t index) {
    return seed + index;
}

}  // namespace sovrisk
