#include <gtest/gtest.h>

#include <cmath>

#include "roughman/rng.hpp"

using roughman::NormalStream;
using roughman::Philox4x32;

// Known-answer vectors of the Random123 reference implementation (Philox4x32-10).
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox4x32(0)({0, 0, 0, 0}), (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32(0xffffffffffffffffull)({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}),
            (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  const std::uint64_t key = (std::uint64_t{0x299f31d0u} << 32) | 0xa4093822u;
  EXPECT_EQ(Philox4x32(key)({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}),
            (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(NormalStream, DeterministicAndStreamsDiffer) {
  const NormalStream a(42, 0, 1), b(42, 0, 1), c(42, 1, 1), d(42, 0, 2), e(43, 0, 1);
  for (std::uint64_t i = 0; i < 16; ++i) {
    EXPECT_EQ(a.normal(i), b.normal(i));
    EXPECT_NE(a.normal(i), c.normal(i));
    EXPECT_NE(a.normal(i), d.normal(i));
    EXPECT_NE(a.normal(i), e.normal(i));
  }
}

TEST(NormalStream, Moments) {
  const NormalStream s(2024, 3, 1);
  constexpr int kCount = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < kCount; ++i) {
    const double x = s.normal(static_cast<std::uint64_t>(i));
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m1 /= kCount;
  m2 /= kCount;
  m4 /= kCount;
  // Standard errors: 1/sqrt(n), sqrt(2/n), sqrt(96/n).
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(kCount));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / kCount));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / kCount));
}
