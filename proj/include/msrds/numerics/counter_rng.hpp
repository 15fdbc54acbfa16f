#ifndef MSRDS_NUMERICS_COUNTER_RNG_HPP
#define MSRDS_NUMERICS_COUNTER_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace msrds::numerics {

// Stateless counter-based random stream: every draw is a pure function of
// (seed, stream, step, slot), so ensembles can be advanced in any order or
// in parallel and still reproduce bitwise. The mixer is the splitmix64
// finalizer applied to a keyed combination of the counter words.

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t counter_word(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t step, std::uint64_t slot) {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    h = mix64(h ^ (0xc2b2ae3d27d4eb4fULL * (step + 1)));
    h = mix64(h ^ (0x165667b19e3779f9ULL * (slot + 1)));
    return h;
}

// Uniform draw in the open interval (0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t step, std::uint64_t slot) {
    const std::uint64_t w = counter_word(seed, stream, step, slot);
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal draw via Box-Muller; consumes slots 2k and 2k+1.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t step, std::uint64_t k) {
    const double u1 = counter_uniform(seed, stream, step, 2 * k);
    const double u2 = counter_uniform(seed, stream, step, 2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace msrds::numerics

#endif
