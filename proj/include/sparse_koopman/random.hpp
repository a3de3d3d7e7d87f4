#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "core.hpp"

namespace sparse_koopman {

/// Counter-based pseudorandom stream.
///
/// Draw number `c` of stream `(seed, stream)` is
/// `splitmix64_mix(key + (c + 1) * 0x9E3779B97F4A7C15)` where
/// `key = splitmix64_mix(seed ^ splitmix64_mix(stream))`. Nothing depends on
/// the standard library's distribution implementations, so a given seed yields
/// the same numbers on every platform. Normals use the Box-Muller transform.
class CounterRng {
public:
    static constexpr const char* algorithm = "splitmix64-counter/box-muller";

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream)))
    {
    }

    static constexpr std::uint64_t mix(std::uint64_t z)
    {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64()
    {
        ++counter_;
        return mix(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1].
    double uniform_open_zero() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open_zero();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    Vector normal_vector(Index n)
    {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Uniform sample from the closed Euclidean ball of the given radius in R^n:
/// a normalized Gaussian direction scaled by radius * u^(1/n).
inline Vector sample_ball(CounterRng& rng, Index n, double radius)
{
    detail::require(n >= 1, "sample_ball: dimension must be positive");
    Vector direction = rng.normal_vector(n);
    double norm = direction.norm();
    while (norm == 0.0) {
        direction = rng.normal_vector(n);
        norm = direction.norm();
    }
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    Vector v = direction * (r / norm);
    // Rounding can push the norm an ulp past the radius.
    if (const double vn = v.norm(); vn > radius) v *= (radius / vn) * (1.0 - 4.0 * 0x1.0p-52);
    return v;
}

} // namespace sparse_koopman
