#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace mscusum {

using Rng = boost::random::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for replication `index` under `master_seed`. The
/// master seed is mixed before the index is xor-ed in so that nearby seeds do
/// not share streams at shifted indices.
inline Rng stream_rng(std::uint64_t master_seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(master_seed) ^ index));
}

/// Ziggurat standard normal sampler (Boost's implementation is fixed across
/// platforms, so paths are reproducible bit for bit).
using StandardNormal = boost::random::normal_distribution<double>;

}  // namespace mscusum
