#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "multisle/loewner.hpp"

using namespace multisle;

TEST(Loewner, EmptyChainIsIdentity) {
  LoewnerChain chain;
  const Complex z(0.3, 1.7);
  const auto m = map_point(chain, z);
  EXPECT_FALSE(m.swallowed);
  EXPECT_EQ(m.value, z);
  EXPECT_EQ(laurent_capacity(chain), 0.0);
}

TEST(Loewner, VerticalSlitClosedForm) {
  // ξ ≡ 0: g_t(z) = sqrt(z² + 4t)
  LoewnerChain chain;
  for (int k = 0; k < 8; ++k) chain.append(0, 0.0, 0.25);
  EXPECT_DOUBLE_EQ(chain.total_capacity(), 2.0);
  for (Complex z : {Complex(0.5, 0.5), Complex(-2, 3), Complex(0.1, 5)}) {
    const auto m = map_point(chain, z);
    ASSERT_FALSE(m.swallowed);
    Complex w = std::sqrt(z * z + 4.0);
    if (w.imag() < 0) w = -w;  // the branch that maps H to H
    EXPECT_NEAR(std::abs(m.value - w), 0.0, 1e-12);
  }
  EXPECT_TRUE(map_point(chain, Complex(0, 2)).swallowed);
  EXPECT_TRUE(map_point(chain, Complex(0, 1)).swallowed);
  EXPECT_FALSE(map_point(chain, Complex(0, 2.01)).swallowed);
}

TEST(Loewner, TransportRealMatchesSlitMap) {
  for (double x : {-3.0, -0.2, 0.4, 5.0}) {
    const double g = transport_real(x, 0.1, 0.3);
    const double expected = 0.1 + std::copysign(std::sqrt((x - 0.1) * (x - 0.1) + 0.6), x - 0.1);
    EXPECT_NEAR(g, expected, 1e-14);
  }
}

TEST(Loewner, LaurentCoefficientIsTotalCapacity) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> cap(1e-4, 1e-2);
  for (int run = 0; run < 20; ++run) {
    LoewnerChain chain;
    double xi[3] = {-1, 0, 1};
    for (int k = 0; k < 400; ++k) {
      const int c = k % 3;
      const double d = cap(rng);
      chain.append(c, xi[c], d);
      xi[c] += std::sqrt(6 * d) * n01(rng);
    }
    EXPECT_NEAR(laurent_capacity(chain) / chain.total_capacity(), 1.0, 1e-3);
  }
}

TEST(Loewner, DisplacementAgreesWithMap) {
  LoewnerChain chain;
  chain.append(0, -0.5, 0.1);
  chain.append(1, 0.7, 0.2);
  const Complex z(0.2, 3.0);
  EXPECT_NEAR(std::abs(map_displacement(chain, z) - (map_point(chain, z).value - z)), 0.0, 1e-13);
}

TEST(Loewner, FrozenDrivingTraceIsVertical) {
  LoewnerChain chain;
  for (int k = 0; k < 200; ++k) chain.append(0, 0.0, 0.005);
  const double t = chain.total_capacity() / 2;
  const auto trace = trace_points(chain, 0, 1);
  ASSERT_GE(trace.size(), 2u);
  EXPECT_NEAR(std::abs(trace.front()), 0.0, 1e-12);
  for (const Complex& p : trace) {
    EXPECT_NEAR(p.real(), 0.0, 1e-9);
    EXPECT_GE(p.imag(), 0.0);
  }
  EXPECT_NEAR(trace.back().imag(), 2 * std::sqrt(t), 1e-9);
}

TEST(Loewner, TracesStartAtRootsAndStayInHalfPlane) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  LoewnerChain chain;
  double xi[2] = {-1, 1};
  for (int k = 0; k < 600; ++k) {
    const int c = k % 2;
    chain.append(c, xi[c], 1e-3);
    xi[c] += std::sqrt(3 * 1e-3) * n01(rng);
  }
  for (int c = 0; c < 2; ++c) {
    const auto trace = trace_points(chain, c, 5);
    EXPECT_NEAR(trace.front().real(), c == 0 ? -1.0 : 1.0, 0.05);
    EXPECT_NEAR(trace.front().imag(), 0.0, 0.05);
    for (const Complex& p : trace) EXPECT_GE(p.imag(), -1e-12);
  }
}
