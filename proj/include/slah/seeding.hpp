#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slah {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Episode seed derivation:
///
///   seed = mix64(mix64(mix64(root) ^ index) ^ fnv1a(tag))
///
/// Stable across versions; every episode of a run draws its generator from
/// (root seed, iteration or grid index, purpose tag) so episodes can run in
/// any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index, std::string_view tag) {
  return mix64(mix64(mix64(root) ^ index) ^ fnv1a(tag));
}

}  // namespace slah
