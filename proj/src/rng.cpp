#include "afo/rng.hpp"

namespace afo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t agent, Stream purpose) {
    const std::uint64_t id = splitmix64(agent * 0x100000001b3ULL + static_cast<std::uint64_t>(purpose));
    return splitmix64(seed ^ id);
}

}  // namespace afo
