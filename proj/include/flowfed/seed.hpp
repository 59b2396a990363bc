#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace flowfed {

// Stable (platform-independent) mixing so derived streams do not depend on
// std::hash.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_seed(
    std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::initializer_list<std::uint64_t> parts) {
  return Rng(derive_seed(parts));
}

// Stream tags keep independent uses of one run seed apart.
namespace stream {
inline constexpr std::uint64_t kDataset = 0x11;
inline constexpr std::uint64_t kPartition = 0x12;
inline constexpr std::uint64_t kSelection = 0x13;
inline constexpr std::uint64_t kTraining = 0x14;
inline constexpr std::uint64_t kModelInit = 0x15;
inline constexpr std::uint64_t kTraffic = 0x16;
inline constexpr std::uint64_t kEvalSet = 0x17;
}  // namespace stream

}  // namespace flowfed
