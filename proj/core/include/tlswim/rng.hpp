#pragma once

#include <cstdint>
#include <random>

namespace tlswim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for stream (a, b) under a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(master) ^ a) + b);
}

// Stream purposes, so that e.g. rollout and evaluation draws never collide.
enum class Stream : std::uint64_t {
  init = 1,
  rollout = 2,
  shuffle = 3,
  evaluation = 4,
  target = 5,
};

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, static_cast<std::uint64_t>(stream), index));
}

}  // namespace tlswim
