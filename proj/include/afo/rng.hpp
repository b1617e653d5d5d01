#ifndef AFO_RNG_HPP
#define AFO_RNG_HPP

#include <cstdint>
#include <random>

namespace afo {

/// Purposes that get their own random substream.
enum class Stream : std::uint64_t {
    compute = 1,
    measure = 2,
    communicate = 3,
    delay = 4,
    problem = 5,
    sampling = 6,
};

/// Seed for the substream identified by (seed, agent, purpose). Mixing is
/// splitmix64 so that neighbouring ids give unrelated streams.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t agent, Stream purpose);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t agent, Stream purpose)
        : engine_(substream_seed(seed, agent, purpose)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }
    /// Uniform integer on [lo, hi].
    long uniform_int(long lo, long hi) {
        return std::uniform_int_distribution<long>(lo, hi)(engine_);
    }
    double normal() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace afo

#endif  // AFO_RNG_HPP
