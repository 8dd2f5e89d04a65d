#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., Random123). Every
// draw is a pure function of (seed, stream, index), so independent Brownian
// components and Monte Carlo seeds never share state.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace roughman {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::array<std::uint32_t, 2> key_;
};

/// Standard normal stream addressed by (stream, purpose); normal(i) is the
/// i-th variate. Two uniforms per Philox block feed one Box-Muller pair.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t purpose = 0)
      : gen_(seed), stream_(stream), purpose_(purpose) {}

  double normal(std::uint64_t index) const {
    const std::uint64_t pair = index / 2;
    const Philox4x32::Block out = gen_({static_cast<std::uint32_t>(pair),
                                        static_cast<std::uint32_t>(pair >> 32), stream_, purpose_});
    // 53-bit uniforms in (0, 1]; the +1 keeps log away from zero.
    const std::uint64_t a = (std::uint64_t{out[0]} << 21) ^ (out[1] >> 11);
    const std::uint64_t b = (std::uint64_t{out[2]} << 21) ^ (out[3] >> 11);
    constexpr double kInv53 = 1.0 / 9007199254740992.0;
    const double u1 = (static_cast<double>(a & ((std::uint64_t{1} << 53) - 1)) + 1.0) * kInv53;
    const double u2 = static_cast<double>(b & ((std::uint64_t{1} << 53) - 1)) * kInv53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index % 2 == 0) ? r * std::cos(angle) : r * std::sin(angle);
  }

 private:
  Philox4x32 gen_;
  std::uint32_t stream_;
  std::uint32_t purpose_;
};

}  // namespace roughman
