#pragma once

#include <cstdint>
#include <random>

namespace histreg {

// Mixes a base seed with a stream index into an independent 64-bit seed
// (splitmix64 finalizer), so per-tree/per-round streams do not depend on
// evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded stream with platform-independent draws. The standard distributions
// are implementation-defined, so all draws are built directly on mt19937_64.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    // Standard normal (Box-Muller, one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace histreg
