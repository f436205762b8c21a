#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace aggr {

// Deterministic RNG with a fully specified bit stream, so runs are
// byte-reproducible regardless of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // warm up through the mixer so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    // splitmix64
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
        return lo + (hi - lo) * uniform01();
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // samples an index proportional to the given non-negative masses
    std::size_t discrete(std::span<const double> masses) {
        double total = 0.0;
        for (double m : masses) total += m;
        if (!(total > 0.0)) throw std::invalid_argument("discrete: zero total mass");
        double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < masses.size(); ++i) {
            acc += masses[i];
            if (u < acc) return i;
        }
        return masses.empty() ? 0 : masses.size() - 1;
    }

private:
    std::uint64_t state_;
};

// Independent per-purpose streams derived from one master seed, so toggling
// one randomized component never perturbs the draws of another.
enum class Stream : std::uint64_t {
    Labels = 1,
    Noise = 2,
    Selection = 3,
    Flips = 4,
};

inline Rng derive_stream(std::uint64_t master_seed, Stream purpose) {
    return Rng(master_seed ^ (static_cast<std::uint64_t>(purpose) * 0xD6E8FEB86659FD93ULL));
}

}  // namespace aggr
