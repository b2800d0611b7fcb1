#pragma once

#include <cmath>
#include <cstdint>

#include "afcdlcz/errors.hpp"

namespace afcdlcz {

// splitmix64, used both as a stream mixer and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Splittable counter-seeded generator (xoshiro256**). Sub-streams derived
/// from (seed, stream_id) are statistically independent and reproducible,
/// which is what makes parallel trial generation deterministic.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }
    Rng(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t m = seed;
        std::uint64_t a = splitmix64(m);
        m ^= 0x6a09e667f3bcc908ULL + stream_id * 0x9e3779b97f4a7c15ULL;
        reseed(a ^ splitmix64(m));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (no cached spare, so the draw count
    /// per call is fixed and streams stay reproducible).
    double normal() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    /// Bose-Einstein (geometric) photon number with the given mean:
    /// P(n) = mu^n / (1+mu)^(n+1). Sampled by CDF inversion.
    std::uint64_t thermal(double mean) {
        if (mean < 0.0) throw DomainError("thermal: negative mean");
        if (mean == 0.0) return 0;
        const double q = mean / (1.0 + mean); // P(n) = (1-q) q^n
        const double u = uniform();
        // CDF(n) = 1 - q^(n+1)  =>  n = floor(log(1-u)/log(q))
        const double n = std::floor(std::log1p(-u) / std::log(q));
        return n < 0.0 ? 0 : static_cast<std::uint64_t>(n);
    }

    /// Poisson counts by Knuth multiplication, chunked so large means do not
    /// underflow exp().
    std::uint64_t poisson(double mean) {
        if (mean < 0.0) throw DomainError("poisson: negative mean");
        std::uint64_t total = 0;
        while (mean > 500.0) {
            total += poisson_small(500.0);
            mean -= 500.0;
        }
        return total + poisson_small(mean);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void reseed(std::uint64_t seed) {
        std::uint64_t m = seed;
        for (auto& s : s_) s = splitmix64(m);
    }

    std::uint64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        double prod = uniform();
        std::uint64_t n = 0;
        while (prod > limit) {
            ++n;
            prod *= uniform();
        }
        return n;
    }

    std::uint64_t s_[4];
};

} // namespace afcdlcz
