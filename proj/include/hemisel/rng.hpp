#pragma once

#include <cstdint>
#include <vector>

namespace hemisel {

/// Counter-based pseudo-random generator (SplitMix64, Steele et al. 2014).
/// The state is (seed, counter); output i is a fixed bijective mix of
/// seed + i * golden gamma, so streams are reproducible bit-for-bit across
/// platforms and independent streams can be derived cheaply by remixing the
/// seed with a stream id.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1); never returns an exact endpoint.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the inverse CDF (deterministic, no rejection).
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Standard Cauchy.
    double cauchy() { return tan(3.14159265358979323846 * (uniform_open() - 0.5)); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Independent stream derived from this generator's seed and a stream id.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return state_; }

private:
    static double tan(double x);
    std::uint64_t state_;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal quantile (Wichura's AS 241, double precision).
double normal_quantile(double p);

} // namespace hemisel
