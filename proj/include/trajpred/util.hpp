#pragma once

// Small deterministic helpers shared across the library: portable random
// draws on top of std::mt19937_64 (the std distributions are not
// implementation-defined-free, the raw engine is), a splitmix64 mixer for
// deriving per-item seeds, FNV-1a content hashing, and fixed-format float
// printing so serialized artifacts are byte-stable across runs.

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace trajpred {

// Uniform double in [0, 1) using the top 53 bits of the engine output.
inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * u01(rng);
}

// Uniform integer in [0, n). n must be > 0.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(u01(rng) * static_cast<double>(n)) % n;
}

// Fisher-Yates shuffle, deterministic given the engine state.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// splitmix64 output function; good enough to decorrelate seed streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and an index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

// FNV-1a 64-bit over a byte string.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Shortest round-trippable decimal form (17 significant digits covers
// every double); used by every text serializer.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace trajpred
