#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace borsuk {

// SplitMix64 finalizer; used to fold stream coordinates into a Philox key.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based Philox4x32-10 generator. A stream is identified by a 64-bit
// key; the 128-bit counter walks through the stream. Two streams with
// different keys are statistically independent, so per-trial streams can be
// derived from (master seed, cell, trial) without any shared state.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key = 0) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  // Stream keyed by a master seed and an arbitrary list of coordinates.
  static Stream derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master);
    for (auto p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
    return Stream(h);
  }

  // Child stream; the parent state is untouched.
  Stream split(std::uint64_t tag) const noexcept {
    std::uint64_t k = (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
    return Stream(mix64(k ^ mix64(tag ^ 0xD1B54A32D192ED03ULL)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ >= 2) {
      block_ = philox(counter_, key_);
      bump_counter();
      pos_ = 0;
    }
    auto lo = static_cast<std::uint64_t>(block_[2 * pos_]);
    auto hi = static_cast<std::uint64_t>(block_[2 * pos_ + 1]);
    ++pos_;
    return (hi << 32) | lo;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block philox(Block ctr, Key key) noexcept {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
      Block next{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      ctr = next;
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

  void bump_counter() noexcept {
    for (auto& c : counter_)
      if (++c != 0) break;
  }

  Key key_;
  Block counter_{0, 0, 0, 0};
  Block block_{};
  int pos_ = 2;
};

}  // namespace borsuk
