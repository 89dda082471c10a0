#pragma once

#include <cstdint>
#include <random>

namespace qnd {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Deterministic per-(trial, cycle) RNG stream. Streams derived from the
// same key are bit-identical regardless of which thread draws from them,
// which makes trial-level parallelism reproducible.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                                   std::uint64_t cycle = 0, std::uint64_t tag = 0) {
    std::uint64_t s = detail::splitmix64(master_seed ^ 0x6a09e667f3bcc908ULL);
    s = detail::splitmix64(s ^ trial_index);
    s = detail::splitmix64(s ^ (cycle + 0x1000));
    s = detail::splitmix64(s ^ (tag + 0x2000));
    return std::mt19937_64(s);
}

}  // namespace qnd
