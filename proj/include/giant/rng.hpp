#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace giant {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Identifies one substream: (master seed, replicate index, consumer label).
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
  std::string stream_label;

  // 64-bit key of the substream; a pure function of the three fields.
  [[nodiscard]] std::uint64_t key() const noexcept {
    std::uint64_t k = detail::mix64(master_seed + detail::kGolden);
    k = detail::mix64(k ^ detail::mix64(replicate_index + 2 * detail::kGolden));
    k = detail::mix64(k ^ detail::fnv1a(stream_label));
    return k;
  }
};

// xoshiro256** seeded by a SplitMix64 walk from the substream key.
//
// Substreams are derived from (seed, replicate, label) without shared state, so
// replicates can run on any thread in any order and still draw identical
// numbers. Satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept {
    std::uint64_t sm = key;
    for (auto& word : state_) {
      sm += detail::kGolden;
      word = detail::mix64(sm);
    }
  }

  explicit Stream(const SeedSpec& spec) noexcept : Stream(spec.key()) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform01() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), bound > 0 (Lemire's nearly-divisionless method).
  std::uint64_t uniform_below(std::uint64_t bound) noexcept {
    __uint128_t m = static_cast<__uint128_t>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<__uint128_t>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

 private:
  std::array<std::uint64_t, 4> state_{};
};

inline Stream make_stream(std::uint64_t master_seed, std::uint64_t replicate_index,
                          std::string_view label) {
  return Stream(SeedSpec{master_seed, replicate_index, std::string(label)});
}

}  // namespace giant
