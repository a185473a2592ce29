#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deconfound {

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Key-derivation for independent substreams. Streams are addressed by a path
// of integers under a root seed: key(root, a, b, c) folds each component
// through SplitMix64, so (seed, replication, stage, index) tuples map to
// well-separated engine seeds. This is the splitting function the experiment
// harness documents for reproducing any run from its manifest.
inline std::uint64_t derive_key(std::uint64_t root, std::uint64_t a = 0,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = detail::splitmix64(root);
    k = detail::splitmix64(k ^ a);
    k = detail::splitmix64(k ^ b);
    k = detail::splitmix64(k ^ c);
    return k;
}

// Deterministic random stream: a seeded mt19937_64 plus fixed transformations
// to doubles. All library sampling goes through this class so that identical
// (inputs, stream state) produce bitwise-identical results.
class RngStream {
public:
    explicit RngStream(std::uint64_t key) : engine_(key) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    // Unbiased integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller; the spare deviate is cached, so draws
    // consume uniforms in a fixed, reproducible order.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * u01() - 1.0;
            v = 2.0 * u01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    bool bernoulli(double p) { return u01() < p; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace deconfound
