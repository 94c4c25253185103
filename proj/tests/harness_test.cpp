#include <gtest/gtest.h>

#include <cmath>

#include "multisle/errors.hpp"
#include "multisle/harness.hpp"
#include "multisle/rng.hpp"

using namespace multisle;

namespace {

EstimationPlan three_point_plan(double kappa, double x, std::size_t n) {
  EstimationPlan plan;
  plan.params.kappa = kappa;
  plan.params.points = {0.0, x, 1.0};
  plan.params.speeds = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  plan.params.partition = parse_partition_selection("fourpoint:1,1");
  plan.params.capacity_cap = 20;
  plan.params.dt_base = 1e-3;
  plan.n_samples = n;
  plan.master_seed = 2024;
  return plan;
}

}  // namespace

TEST(Harness, WilsonIntervalClosedForm) {
  const double z = 1.959963984540054;
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{0, 10}, {3, 10}, {50, 100}, {100, 100}, {7, 2000}}) {
    const double p = static_cast<double>(k) / n;
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n));
    const Interval ci = wilson_interval(k, n);
    EXPECT_NEAR(ci.lo, centre - half, 1e-14);
    EXPECT_NEAR(ci.hi, centre + half, 1e-14);
    EXPECT_GE(ci.lo, 0.0);
    EXPECT_LE(ci.hi, 1.0);
  }
}

TEST(Harness, ThreadCountRespectsEnvironmentCap) {
  EXPECT_GE(effective_threads(0), 1u);
  EXPECT_EQ(effective_threads(1), 1u);
}

TEST(Harness, SeedsAreIndependentOfScheduling) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Harness, ReproducibleAcrossThreadHints) {
  auto plan = three_point_plan(6, 0.4, 24);
  plan.keep_samples = true;
  plan.threads = 1;
  const auto serial = estimate_arch_probabilities(plan);
  plan.threads = 3;
  const auto parallel = estimate_arch_probabilities(plan);
  EXPECT_EQ(serial.arch_counts, parallel.arch_counts);
  EXPECT_EQ(serial.failures, parallel.failures);
  EXPECT_EQ(serial.mean_stopping_capacity, parallel.mean_stopping_capacity);
  ASSERT_EQ(serial.samples.size(), parallel.samples.size());
  for (std::size_t i = 0; i < serial.samples.size(); ++i) {
    EXPECT_EQ(serial.samples[i].seed, parallel.samples[i].seed);
    EXPECT_EQ(serial.samples[i].tau, parallel.samples[i].tau);
  }
}

TEST(Harness, CountsAndIntervalsAreConsistent) {
  auto plan = three_point_plan(3, 0.5, 40);
  const auto est = estimate_arch_probabilities(plan);
  std::size_t total = est.failures;
  std::size_t resolved = 0;
  for (const auto& [key, count] : est.arch_counts) {
    total += count;
    if (est.arches.at(key).m() == 1) resolved += count;
    EXPECT_NEAR(est.estimates.at(key), static_cast<double>(count) / est.n_samples, 1e-15);
    EXPECT_LE(est.ci.at(key).lo, est.estimates.at(key));
    EXPECT_GE(est.ci.at(key).hi, est.estimates.at(key));
  }
  EXPECT_EQ(total, plan.n_samples);
  EXPECT_EQ(resolved, est.resolved);
  EXPECT_EQ(est.count("(1,2)|3") + est.count("(2,3)|1"), est.resolved);
  EXPECT_EQ(est.count("nonexistent"), 0u);
}

TEST(Harness, TooManyFailuresRaise) {
  auto plan = three_point_plan(7, 0.5, 20);
  plan.params.dt_base = 5.0;
  plan.params.gap_scale = 1e-12;
  EXPECT_THROW(estimate_arch_probabilities(plan), HarnessError);
}

TEST(Harness, BesselDimension) {
  for (double kappa : {2.0, 4.0, 6.0, 7.0}) {
    EXPECT_NEAR(bessel_effective_dimension(kappa, (kappa - 6) / kappa), 3 - 8 / kappa, 1e-14);
    EXPECT_NEAR(bessel_effective_dimension(kappa, 2 / kappa), 1 + 8 / kappa, 1e-14);
  }
  EXPECT_NEAR(bessel_effective_dimension(6, 0), 5.0 / 3.0, 1e-15);
}

TEST(Harness, MixedHittingLaw) {
  EXPECT_DOUBLE_EQ(hitting_probability_mixed(6, 1, 0, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(hitting_probability_mixed(6, 0, 1, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(hitting_probability_mixed(6, 1, 1, 1.0), 0.5);
  EXPECT_NEAR(hitting_probability_mixed(4, 2, 1, 3.0), 2.0 / (2.0 + 3.0), 1e-15);
}

TEST(Harness, MixedHittingIsMonotoneInCap) {
  EstimationPlan plan;
  plan.params.kappa = 6;
  plan.params.points = {0.0, 1.0};
  plan.params.speeds = {0.5, 0.5};
  plan.params.partition = parse_partition_selection("mixture:1,1");
  plan.params.dt_base = 1e-3;
  plan.n_samples = 30;
  const auto est = estimate_mixed_hitting(plan, 2.0, 6.0);
  EXPECT_LE(est.hits[0], est.hits[1]);
  EXPECT_NEAR(est.cap_shift, est.frequency[1] - est.frequency[0], 1e-15);
}

TEST(Harness, MartingaleOfZItselfIsOne) {
  auto plan = three_point_plan(3, 0.3, 16);
  const auto z = make_partition_function(plan.params.partition, plan.params.kappa, 3);
  const std::vector<double> checkpoints = {0.05, 0.1, 0.2};
  const auto rep = martingale_diagnostic(plan, [&](std::span<const double> x) { return z->log_value(x); },
                                         checkpoints);
  EXPECT_DOUBLE_EQ(rep.initial, 1.0);
  ASSERT_EQ(rep.points.size(), 3u);
  for (const auto& p : rep.points) {
    EXPECT_NEAR(p.mean, 1.0, 1e-12);
    EXPECT_NEAR(p.std_error, 0.0, 1e-12);
  }
  EXPECT_TRUE(rep.within_band());
}
