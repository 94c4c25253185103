#include <gtest/gtest.h>

#include <cmath>

#include "multisle/engine.hpp"
#include "multisle/errors.hpp"

using namespace multisle;

namespace {

SleParameters two_point(const char* partition, double kappa = 6.0) {
  SleParameters p;
  p.kappa = kappa;
  p.points = {0.0, 1.0};
  p.speeds = {0.5, 0.5};
  p.partition = parse_partition_selection(partition);
  p.capacity_cap = 2.0;
  p.dt_base = 1e-3;
  return p;
}

const VelocityField kNoDrift = [](std::span<const double>, std::span<double> u) {
  for (double& v : u) v = 0.0;
};

}  // namespace

TEST(Engine, ValidateAggregatesProblems) {
  SleParameters p;
  p.kappa = 9;
  p.points = {0, 2, 1};
  p.speeds = {0.5, 0.2};
  p.dt_base = -1;
  try {
    validate(p);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.problems().size(), 4u);
  }
  EXPECT_NO_THROW(validate(two_point("Z0")));
  auto close = two_point("Z0");
  close.points = {0.0, 1e-9};
  close.collision_epsilon = 1e-6;
  EXPECT_THROW(validate(close), ConfigError);
}

TEST(Engine, DefaultsScaleWithConfiguration) {
  auto p = two_point("Z2");
  p.points = {1.0, 3.0};
  EXPECT_DOUBLE_EQ(effective_collision_epsilon(p), 2e-4);
  EXPECT_DOUBLE_EQ(effective_gap_scale(p), 2.0);
  p.collision_epsilon = 0.01;
  p.gap_scale = 0.5;
  EXPECT_DOUBLE_EQ(effective_collision_epsilon(p), 0.01);
  EXPECT_DOUBLE_EQ(effective_gap_scale(p), 0.5);
}

TEST(Engine, SingleCurveIsScaledBrownianMotion) {
  DrivingState s;
  s.positions = {0.25};
  s.alive = {1};
  const double speeds[] = {1.0}, g[] = {0.7};
  LoewnerChain chain;
  step(s, &chain, 4.0, speeds, kNoDrift, g, 0.01);
  EXPECT_NEAR(s.positions[0], 0.25 + std::sqrt(4.0 * 0.01) * 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(s.t, 0.01);
  ASSERT_EQ(chain.size(), 1u);
  EXPECT_DOUBLE_EQ(chain.steps()[0].driving, 0.25);
  EXPECT_DOUBLE_EQ(chain.total_capacity(), 0.02);
}

TEST(Engine, NoiseFreeStepIsPairwiseTransport) {
  DrivingState s;
  s.positions = {-1.0, 0.5};
  s.alive = {1, 1};
  const double speeds[] = {0.3, 0.7}, g[] = {0.0, 0.0};
  const double dt = 1e-3;
  step(s, nullptr, 6.0, speeds, kNoDrift, g, dt);
  // each point moves only through the other curve's slit map
  const double x2 = transport_real(0.5, -1.0, 2 * 0.3 * dt);
  const double x1 = transport_real(-1.0, x2, 2 * 0.7 * dt);
  EXPECT_NEAR(s.positions[1], x2, 1e-15);
  EXPECT_NEAR(s.positions[0], x1, 1e-15);
}

TEST(Engine, PairDriftNumerator) {
  for (double kappa : {2.0, 4.0, 6.0}) {
    const auto zk = make_partition_function(parse_partition_selection("Z0"), kappa, 2);
    const double x[] = {0.2, 1.5}, a[] = {0.4, 0.6};
    const double delta = (kappa - 6) / kappa;
    const auto r = drift_rates(*zk, a, x);
    EXPECT_NEAR(r[0], (2 * a[1] + kappa * delta * a[0]) / (x[0] - x[1]), 1e-12);
    EXPECT_NEAR(r[1], (2 * a[0] + kappa * delta * a[1]) / (x[1] - x[0]), 1e-12);
  }
}

TEST(Engine, SleKappaRhoReduction) {
  // a = (1, 0): the driving curve sees (κ-6)/(X1-X2), the passive point the chordal flow
  for (double kappa : {3.0, 6.0, 7.0}) {
    const auto z = make_partition_function(parse_partition_selection("Z0"), kappa, 2);
    const double x[] = {-0.3, 0.9}, a[] = {1.0, 0.0};
    const auto r = drift_rates(*z, a, x);
    EXPECT_NEAR(r[0], (kappa - 6) / (x[0] - x[1]), 1e-12);
    EXPECT_NEAR(r[1], 2 / (x[1] - x[0]), 1e-12);
  }
}

TEST(Engine, PassivePointFollowsHydrodynamicFlow) {
  auto p = two_point("Z0", 6.0);
  p.speeds = {1.0, 0.0};
  p.capacity_cap = 0.2;
  GaussianNoise noise(5);
  EvolveOptions opt;
  opt.record_chain = true;
  const auto out = evolve_until(p, noise, opt);
  // B is transported exactly by every slit of A
  double b = 1.0;
  for (const auto& s : out.chain.steps()) b = transport_real(b, s.driving, s.capacity);
  EXPECT_NEAR(out.final_positions[1], b, 1e-12);
}

TEST(Engine, ZeroNoiseIsBitReproducible) {
  SleParameters p;
  p.kappa = 3;
  p.points = {0.0, 0.4, 1.0};
  p.speeds = {0.2, 0.5, 0.3};
  p.partition = parse_partition_selection("fourpoint:1,1");
  p.capacity_cap = 1.0;
  ZeroNoise a, b;
  const auto r1 = evolve_until(p, a);
  const auto r2 = evolve_until(p, b);
  EXPECT_EQ(r1.tau, r2.tau);
  EXPECT_EQ(r1.final_positions, r2.final_positions);
  EXPECT_EQ(r1.collisions, r2.collisions);
  EXPECT_EQ(r1.diagnostics.steps, r2.diagnostics.steps);
}

TEST(Engine, SeededNoiseIsReproducible) {
  auto p = two_point("Z0");
  GaussianNoise a(99), b(99);
  const auto r1 = evolve_until(p, a);
  const auto r2 = evolve_until(p, b);
  EXPECT_EQ(r1.tau, r2.tau);
  EXPECT_EQ(r1.final_positions, r2.final_positions);
}

TEST(Engine, OutcomeInvariants) {
  SleParameters p;
  p.kappa = 6;
  p.points = {0.0, 0.3, 1.0};
  p.speeds = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  p.partition = parse_partition_selection("fourpoint:1,1");
  p.capacity_cap = 5.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    GaussianNoise noise(seed);
    EvolveOptions opt;
    opt.record_chain = true;
    const auto out = evolve_until(p, noise, opt);
    ASSERT_NE(out.reason, StopReason::NumericalFailure) << out.diagnostics.failure;
    EXPECT_LE(2 * out.tau, p.capacity_cap * (1 + 1e-12));
    EXPECT_EQ(out.arch, classify_outcome(3, out.collisions));
    EXPECT_NEAR(out.chain.total_capacity(), 2 * out.tau, 1e-9 * (1 + out.tau));
    EXPECT_NEAR(laurent_capacity(out.chain) / (2 * out.tau), 1.0, 1e-3);
    if (out.reason == StopReason::CollisionComplete) {
      EXPECT_EQ(out.collisions.size(), 1u);
    }
  }
}

TEST(Engine, ScalingCovariance) {
  // λ-scaled points, cap and step sizes give the λ-scaled path for homogeneous Z
  auto p = two_point("Z0", 5.0);
  p.capacity_cap = 3.0;
  auto q = p;
  const double lam = 2.0;
  for (double& x : q.points) x *= lam;
  q.capacity_cap *= lam * lam;
  q.dt_base *= lam * lam;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GaussianNoise a(seed), b(seed);
    const auto r1 = evolve_until(p, a);
    const auto r2 = evolve_until(q, b);
    EXPECT_EQ(r1.reason, r2.reason);
    EXPECT_NEAR(r2.tau, lam * lam * r1.tau, 1e-9 * (1 + r2.tau));
    EXPECT_NEAR(r2.final_positions[0], lam * r1.final_positions[0], 1e-8);
  }
}

TEST(Engine, CheckpointsLandExactly) {
  auto p = two_point("Z2");
  p.capacity_cap = 1.0;
  GaussianNoise noise(3);
  EvolveOptions opt;
  opt.checkpoints = {0.1, 0.25, 0.5};
  std::vector<double> seen;
  opt.on_checkpoint = [&](std::size_t, const DrivingState& s) { seen.push_back(2 * s.t); };
  const auto out = evolve_until(p, noise, opt);
  ASSERT_EQ(seen.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(seen[i], opt.checkpoints[i], 1e-12);
  EXPECT_EQ(out.reason, StopReason::CapacityCap);
}

TEST(Engine, TracesStartAtInitialPoints) {
  SleParameters p;
  p.kappa = 4;
  p.points = {-1.0, 0.0, 1.0};
  p.speeds = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  p.partition = parse_partition_selection("chordal");
  p.capacity_cap = 0.3;
  GaussianNoise noise(17);
  EvolveOptions opt;
  opt.trace_stride = 4;
  const auto out = evolve_until(p, noise, opt);
  ASSERT_EQ(out.traces.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_FALSE(out.traces[i].empty());
    EXPECT_NEAR(std::abs(out.traces[i].front() - Complex(p.points[i], 0)), 0.0, 0.05);
    for (const Complex& z : out.traces[i]) EXPECT_GE(z.imag(), -1e-12);
  }
}

TEST(Engine, StopReasonNames) {
  EXPECT_STREQ(to_string(StopReason::CollisionComplete), "collision-complete");
  EXPECT_STREQ(to_string(StopReason::CapacityCap), "capacity-cap");
  EXPECT_STREQ(to_string(StopReason::NumericalFailure), "numerical-failure");
}
