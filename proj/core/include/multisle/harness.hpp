#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "multisle/arch.hpp"
#include "multisle/engine.hpp"

namespace multisle {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Two-sided 95% Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct EstimationPlan {
  SleParameters params;
  std::size_t n_samples = 1000;
  std::uint64_t master_seed = 1;
  /// Worker count hint; 0 means hardware concurrency. MULTISLE_THREADS caps it.
  unsigned threads = 0;
  /// Keep one summary per sample in the estimate.
  bool keep_samples = false;
  /// Reconstruct traces for the first `trace_samples` samples with this stride.
  std::size_t trace_samples = 0;
  std::size_t trace_stride = 0;
};

/// Number of workers the harness will actually use for a plan.
unsigned effective_threads(unsigned hint);

struct SampleSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  StopReason reason = StopReason::CapacityCap;
  double tau = 0.0;
  std::vector<IndexPair> collisions;
  ArchConfiguration arch;
  std::size_t steps = 0;
  std::string failure;
  std::vector<std::vector<Complex>> traces;
};

struct ArchEstimate {
  std::size_t n_samples = 0;
  std::size_t failures = 0;
  /// Samples that closed every expected arch before the cap.
  std::size_t resolved = 0;
  std::map<std::string, ArchConfiguration> arches;
  /// Keyed by ArchConfiguration::key(); together with `failures` sums to n_samples.
  std::map<std::string, std::size_t> arch_counts;
  std::map<std::string, double> estimates;   // count / n_samples
  std::map<std::string, Interval> ci;        // Wilson, same denominator
  double mean_stopping_capacity = 0.0;       // mean of 2τ over non-failed samples
  double runtime_s = 0.0;
  std::vector<SampleSummary> samples;

  std::size_t count(const std::string& key) const;
  /// count / resolved: the arch frequency among samples whose topology was decided.
  double resolved_frequency(const std::string& key) const;
  Interval resolved_interval(const std::string& key) const;
};

/// Runs plan.n_samples independent simulations with per-sample seeds derived
/// from (master_seed, index). Throws HarnessError if more than 5% fail.
ArchEstimate estimate_arch_probabilities(const EstimationPlan& plan);

/// d_eff = 1 + 2Δ + 4/κ for the gap process of a two-point system.
double bessel_effective_dimension(double kappa, double delta);

/// λ / (λ + μ y^((8-κ)/κ)): probability that the mixture system collides.
double hitting_probability_mixed(double kappa, double lambda, double mu, double y);

struct MixedHittingEstimate {
  std::array<double, 2> caps{};
  std::array<std::size_t, 2> hits{};
  std::array<double, 2> frequency{};
  std::array<Interval, 2> ci{};
  std::size_t n_samples = 0;
  std::size_t failures = 0;
  double cap_shift = 0.0;  // frequency[1] - frequency[0]
  double runtime_s = 0.0;
};

/// Collision frequency of a two-point plan before each of two capacity caps.
/// Each sample is run once up to the larger cap; with the same noise stream the
/// path up to the smaller cap is the one a separate run would produce, so the
/// indicator is monotone in the cap per seed.
MixedHittingEstimate estimate_mixed_hitting(const EstimationPlan& plan, double cap_small, double cap_large);

/// log of a numerator Z̃ evaluated on the full point set.
using LogFunction = std::function<double(std::span<const double> x)>;

struct MartingalePoint {
  double capacity = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t frozen = 0;  // samples already stopped at this checkpoint
};

struct MartingaleReport {
  double initial = 0.0;
  std::vector<MartingalePoint> points;
  std::size_t n_samples = 0;
  std::size_t failures = 0;

  /// Every checkpoint mean within `sigmas` standard errors of the initial value.
  bool within_band(double sigmas = 3.0) const;
};

/// Sample means of Z̃(X_t)/Z(X_t) at the given capacities (2t). A sample that
/// stops early contributes its value at the stopping time to later checkpoints.
MartingaleReport martingale_diagnostic(const EstimationPlan& plan, const LogFunction& log_numerator,
                                       std::span<const double> checkpoints);

}  // namespace multisle
