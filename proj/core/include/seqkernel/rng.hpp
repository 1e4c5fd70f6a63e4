#pragma once

#include <cstdint>
#include <random>

namespace seqkernel {

// Every random draw comes from a std::mt19937_64 whose seed is derived from
// (user seed, stream id) through SplitMix64 mixing. Stream ids:
//   replication r of a simulation study  -> r
//   fold assignment                      -> kFoldStream
// so a replication's data never depends on how many threads ran it.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t kFoldStream = 0xf01d5eedULL;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace seqkernel
