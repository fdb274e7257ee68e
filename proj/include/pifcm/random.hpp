#pragma once

#include <cstdint>

namespace pifcm {

/// splitmix64 finalizer; fans one master seed out to independent sub-seeds.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Sub-seed streams used across modules.
inline constexpr std::uint64_t kStreamCenterInit = 1;
inline constexpr std::uint64_t kStreamSwarm = 2;

}  // namespace pifcm
