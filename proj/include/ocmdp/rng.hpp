#pragma once

#include <cstdint>
#include <random>

namespace ocmdp {

/// Advances a splitmix64 state and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive mix of seed components.  Used to derive independent
/// streams (per run, per slot, per trial) from one scenario seed without
/// correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t a) {
    std::uint64_t s = a;
    return splitmix64(s);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t a, Rest... rest) {
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + mix_seed(static_cast<std::uint64_t>(rest)...));
    return splitmix64(s);
}

/// Engine seeded from mixed components; fresh engines per logical stream keep
/// sampling a pure function of the identifying tuple.
template <typename... Parts>
std::mt19937_64 make_engine(Parts... parts) {
    return std::mt19937_64(mix_seed(static_cast<std::uint64_t>(parts)...));
}

}  // namespace ocmdp
