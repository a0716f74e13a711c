#ifndef U2NET_RNG_HPP
#define U2NET_RNG_HPP

#include <cstdint>
#include <random>

namespace u2net {

// Seeded generator used everywhere randomness is needed (init, batching,
// augmentation). The raw engine is std::mt19937_64; all derived draws below
// are defined directly on the 64-bit output stream rather than through
// std::uniform_*_distribution, so a given seed replays the same sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Name recorded in checkpoints so a run can state what produced it.
    static const char* algorithm() { return "mt19937_64"; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [lo, hi) with 53 random bits.
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    // Uniform integer in [lo, hi] (inclusive).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

    // Standard normal via Box-Muller (used only by tests that want
    // well-separated random values).
    double normal();

private:
    std::mt19937_64 engine_;
};

} // namespace u2net

#endif
