#pragma once

// Reproducible random streams.
//
// Every stream is a Philox4x64-10 counter-based generator (Salmon et al.,
// "Parallel random numbers: as easy as 1, 2, 3", SC'11). The 128-bit key is
// (base_seed, FNV-1a hash of the purpose tag); the 256-bit counter is laid out
// as
//
//   c[0], c[1]  block number within the stream (128-bit)
//   c[2], c[3]  replication index (128-bit, c[3] currently always 0)
//
// so two streams with the same key and different replication indices draw
// from disjoint counter ranges of one bijection, and streams with different
// keys are different bijections. child(j) derives a sub-stream by mixing the
// parent's replication index into the key, which keeps nested replication
// trees (replication -> sample -> ancestor) collision free.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace polling {

namespace detail {

inline constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

/// One Philox4x64-10 block: a keyed bijection on 256-bit counters.
inline PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += detail::kPhiloxW0;
      key[1] += detail::kPhiloxW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo64(detail::kPhiloxM0, ctr[0], hi0, lo0);
    detail::mulhilo64(detail::kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// Deterministic stream keyed by (base_seed, purpose tag, replication index).
/// Satisfies UniformRandomBitGenerator. Single owner; copy to fork the state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t base_seed, std::string_view tag, std::uint64_t index = 0)
      : RngStream(base_seed, detail::fnv1a64(tag), index, 0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  /// Standard normal via Box-Muller (one output per pair of uniforms).
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

  /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t n) {
    std::uint64_t hi, lo;
    detail::mulhilo64((*this)(), n, hi, lo);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) detail::mulhilo64((*this)(), n, hi, lo);
    }
    return hi;
  }

  /// Independent sub-stream number j of this stream.
  RngStream child(std::uint64_t j) const {
    const std::uint64_t mixed =
        detail::splitmix64(key_[1] ^ detail::splitmix64(index_ ^ 0x5851F42D4C957F2DULL));
    return RngStream(key_[0], mixed, j, 0);
  }

  std::uint64_t base_seed() const { return key_[0]; }
  std::uint64_t tag_hash() const { return key_[1]; }
  std::uint64_t index() const { return index_; }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  RngStream(std::uint64_t seed, std::uint64_t tag_hash, std::uint64_t index, int)
      : key_{seed, tag_hash}, index_(index) {}

  void refill() {
    buffer_ = philox4x64_10({block_lo_, block_hi_, index_, 0}, key_);
    if (++block_lo_ == 0) ++block_hi_;
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint64_t index_;
  std::uint64_t block_lo_ = 0;
  std::uint64_t block_hi_ = 0;
  PhiloxCounter buffer_{};
  int pos_ = 4;
};

}  // namespace polling
