#pragma once

// Counter-based Philox4x32-10 generator. A stream is identified by
// (master seed, path index); draws within a stream advance a private counter,
// so a path's randomness does not depend on how paths are scheduled.

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace hypbridge::rng {

class Philox4x32 {
 public:
  using result_type = std::uint64_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 2) {
      block_ = round10(ctr_, key_);
      if (++ctr_[0] == 0) ++ctr_[1];
      pos_ = 0;
    }
    const result_type out = (result_type(block_[2 * pos_]) << 32) | block_[2 * pos_ + 1];
    ++pos_;
    return out;
  }

  // Uniform in (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  using Block = std::array<std::uint32_t, 4>;

  static Block round10(Block c, std::array<std::uint32_t, 2> k) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = std::uint64_t(M0) * c[0];
      const std::uint64_t p1 = std::uint64_t(M1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += W0;
      k[1] += W1;
    }
    return c;
  }

  std::array<std::uint32_t, 2> key_;
  Block ctr_;
  Block block_{};
  int pos_ = 2;
};

// Per-path stream with a standard-normal helper.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path) : gen_(seed, path) {}

  double normal() { return normal_(gen_); }
  double uniform() { return gen_.uniform(); }
  Philox4x32& engine() { return gen_; }

 private:
  Philox4x32 gen_;
  std::normal_distribution<double> normal_;
};

// splitmix64 finalizer, for deriving independent master seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace hypbridge::rng
