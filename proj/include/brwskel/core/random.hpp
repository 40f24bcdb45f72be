#pragma once

#include <cstdint>
#include <random>

namespace brwskel {

using Rng = std::mt19937_64;

namespace detail {
// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Independent stream for one replica. The stream depends only on
/// (master seed, replica index, purpose tag), never on scheduling.
inline Rng replica_stream(std::uint64_t master_seed, std::uint64_t replica, std::uint64_t tag = 0) {
  const std::uint64_t a = detail::mix64(master_seed ^ detail::mix64(tag + 0x5851f42d4c957f2dULL));
  const std::uint64_t b = detail::mix64(a ^ detail::mix64(replica));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Rng(seq);
}

}  // namespace brwskel
