#pragma once

// Counter-based random streams.
//
// Every draw in the library is addressed by the tuple
//   (master seed, trial index, step index, draw kind, draw index)
// and produced by Philox4x64-10 with key = {master seed, trial index} and
// counter = {draw block, step index, draw kind, 0}. Each block yields four
// 64-bit words. Uniforms use the top 53 bits as (w >> 11) * 2^-53 shifted by
// half an ulp so they lie in the open interval (0, 1). Normals are produced
// pairwise by the Box-Muller transform
//   z0 = sqrt(-2 log u0) cos(2 pi u1),  z1 = sqrt(-2 log u0) sin(2 pi u1)
// from consecutive uniforms. Any generator following this description
// reproduces every trace bit for bit (up to libm differences in log/cos/sin).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace hardmc {

/// Philox4x64 with 10 rounds.
class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
};

/// What a sequence of draws is used for. Part of the counter, so distinct
/// purposes never share random words.
enum class DrawKind : std::uint64_t {
  proposal_noise = 0,
  accept_uniform = 1,
  stationary = 2,
  start = 3,
  witness = 4,
};

// Top 52 bits at cell midpoints: every value is exact and lies in
// [2^-53, 1 - 2^-53]. (53 bits would round the top cell up to 1.0.)
inline double uniform_from_bits(std::uint64_t w) {
  return (static_cast<double>(w >> 12) + 0.5) * 0x1.0p-52;
}

/// Sequential draws for one (step, kind) address.
class DrawSequence {
 public:
  DrawSequence(Philox4x64::Key key, std::uint64_t step, DrawKind kind)
      : key_(key), step_(step), kind_(static_cast<std::uint64_t>(kind)) {}

  std::uint64_t next_bits() {
    if (pos_ == 4) {
      block_ = Philox4x64::generate({block_index_, step_, kind_, 0}, key_);
      ++block_index_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  double uniform() { return uniform_from_bits(next_bits()); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u0 = uniform();
    const double u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u0));
    const double angle = 2.0 * std::numbers::pi * u1;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  void fill_normal(std::span<double> out) {
    for (double& z : out) z = normal();
  }

  std::uint64_t blocks_used() const { return block_index_; }

 private:
  Philox4x64::Key key_;
  std::uint64_t step_;
  std::uint64_t kind_;
  std::uint64_t block_index_ = 0;
  Philox4x64::Counter block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// A stream keyed by (master seed, trial index). Copyable and immutable;
/// all state lives in the DrawSequence objects it hands out.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t trial)
      : key_{master_seed, trial} {}

  DrawSequence draws(std::uint64_t step, DrawKind kind) const {
    return DrawSequence(key_, step, kind);
  }

  std::uint64_t master_seed() const { return key_[0]; }
  std::uint64_t trial() const { return key_[1]; }

  /// Stream for a sub-trial; used when one trial fans out into independent
  /// replicas (e.g. per grid point).
  RandomStream child(std::uint64_t index) const {
    const auto mixed = Philox4x64::generate({index, 0, 0, 0xC41DULL}, key_);
    return RandomStream(mixed[0], mixed[1]);
  }

 private:
  Philox4x64::Key key_;
};

}  // namespace hardmc
