#include "multisle/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "multisle/errors.hpp"
#include "multisle/rng.hpp"

namespace multisle {

namespace {

constexpr double kMaxFailureRate = 0.05;

// Work items are claimed from a shared counter; results land in per-index
// slots, so the aggregate never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned extra = static_cast<unsigned>(std::min<std::size_t>(threads, n)) - 1;
    for (unsigned t = 0; t < extra; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// One sample; numerical trouble inside the run becomes a failure record.
SimulationOutcome run_sample(const SleParameters& params, std::uint64_t seed, const EvolveOptions& options) {
  GaussianNoise noise(seed);
  try {
    return evolve_until(params, noise, options);
  } catch (const DomainError& e) {
    SimulationOutcome out;
    out.reason = StopReason::NumericalFailure;
    out.diagnostics.failure = e.what();
    out.arch = classify_outcome(static_cast<int>(params.points.size()), {});
    return out;
  }
}

void check_failure_rate(std::size_t failures, std::size_t n, const std::string& first_failure) {
  if (static_cast<double>(failures) > kMaxFailureRate * static_cast<double>(n)) {
    throw HarnessError(std::to_string(failures) + " of " + std::to_string(n) +
                       " samples failed numerically (limit 5%); first failure: " + first_failure);
  }
}

}  // namespace

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

unsigned effective_threads(unsigned hint) {
  unsigned threads = hint > 0 ? hint : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MULTISLE_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) threads = std::min<unsigned>(threads, static_cast<unsigned>(cap));
  }
  return std::max(1u, threads);
}

std::size_t ArchEstimate::count(const std::string& key) const {
  const auto it = arch_counts.find(key);
  return it == arch_counts.end() ? 0 : it->second;
}

double ArchEstimate::resolved_frequency(const std::string& key) const {
  return resolved == 0 ? 0.0 : static_cast<double>(count(key)) / static_cast<double>(resolved);
}

Interval ArchEstimate::resolved_interval(const std::string& key) const { return wilson_interval(count(key), resolved); }

ArchEstimate estimate_arch_probabilities(const EstimationPlan& plan) {
  if (plan.n_samples == 0) throw HarnessError("n_samples must be at least 1");
  validate(plan.params);
  const auto start = std::chrono::steady_clock::now();

  std::vector<SampleSummary> samples(plan.n_samples);
  parallel_for(plan.n_samples, effective_threads(plan.threads), [&](std::size_t i) {
    EvolveOptions options;
    if (i < plan.trace_samples) options.trace_stride = std::max<std::size_t>(plan.trace_stride, 1);
    const std::uint64_t seed = derive_seed(plan.master_seed, i);
    SimulationOutcome o = run_sample(plan.params, seed, options);
    SampleSummary& s = samples[i];
    s.index = i;
    s.seed = seed;
    s.reason = o.reason;
    s.tau = o.tau;
    s.collisions = std::move(o.collisions);
    s.arch = std::move(o.arch);
    s.steps = o.diagnostics.steps;
    s.failure = std::move(o.diagnostics.failure);
    s.traces = std::move(o.traces);
  });

  ArchEstimate est;
  est.n_samples = plan.n_samples;
  double capacity_sum = 0.0;
  std::string first_failure;
  for (const SampleSummary& s : samples) {
    if (s.reason == StopReason::NumericalFailure) {
      if (est.failures++ == 0) first_failure = s.failure;
      continue;
    }
    if (s.reason == StopReason::CollisionComplete) ++est.resolved;
    const std::string key = s.arch.key();
    est.arches.emplace(key, s.arch);
    ++est.arch_counts[key];
    capacity_sum += 2.0 * s.tau;
  }
  check_failure_rate(est.failures, est.n_samples, first_failure);
  for (const auto& [key, k] : est.arch_counts) {
    est.estimates[key] = static_cast<double>(k) / static_cast<double>(est.n_samples);
    est.ci[key] = wilson_interval(k, est.n_samples);
  }
  const std::size_t ok = est.n_samples - est.failures;
  est.mean_stopping_capacity = ok > 0 ? capacity_sum / static_cast<double>(ok) : 0.0;
  if (plan.keep_samples || plan.trace_samples > 0) {
    if (!plan.keep_samples) samples.resize(std::min(plan.trace_samples, samples.size()));
    est.samples = std::move(samples);
  }
  est.runtime_s = seconds_since(start);
  return est;
}

double bessel_effective_dimension(double kappa, double delta) {
  if (!(kappa > 0.0)) throw DomainError("bessel_effective_dimension: κ must be positive");
  return 1.0 + 2.0 * delta + 4.0 / kappa;
}

double hitting_probability_mixed(double kappa, double lambda, double mu, double y) {
  if (!(kappa > 0.0 && kappa < 8.0)) throw DomainError("κ must lie in (0,8)");
  if (!(y > 0.0)) throw DomainError("hitting_probability_mixed: y must be positive");
  if (!(lambda >= 0.0 && mu >= 0.0) || lambda + mu == 0.0)
    throw DomainError("hitting_probability_mixed: weights must be non-negative and not both zero");
  return lambda / (lambda + mu * std::pow(y, (8.0 - kappa) / kappa));
}

MixedHittingEstimate estimate_mixed_hitting(const EstimationPlan& plan, double cap_small, double cap_large) {
  if (plan.params.points.size() != 2) throw HarnessError("estimate_mixed_hitting needs a two-point plan");
  if (!(cap_small > 0.0 && cap_small < cap_large)) throw HarnessError("caps must satisfy 0 < small < large");
  if (plan.n_samples == 0) throw HarnessError("n_samples must be at least 1");
  SleParameters params = plan.params;
  params.capacity_cap = cap_large;
  validate(params);
  const auto start = std::chrono::steady_clock::now();

  // 0 = failure, 1 = no hit, 2 = hit before the large cap only, 3 = hit before both.
  std::vector<int> result(plan.n_samples, 0);
  std::vector<std::string> failure(plan.n_samples);
  parallel_for(plan.n_samples, effective_threads(plan.threads), [&](std::size_t i) {
    EvolveOptions options;
    options.checkpoints = {cap_small};
    const SimulationOutcome o = run_sample(params, derive_seed(plan.master_seed, i), options);
    if (o.reason == StopReason::NumericalFailure) {
      failure[i] = o.diagnostics.failure;
      return;
    }
    if (o.reason != StopReason::CollisionComplete) {
      result[i] = 1;
      return;
    }
    result[i] = 2.0 * o.tau <= cap_small * (1.0 + 1e-12) ? 3 : 2;
  });

  MixedHittingEstimate est;
  est.caps = {cap_small, cap_large};
  est.n_samples = plan.n_samples;
  std::string first_failure;
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (result[i] == 0) {
      if (est.failures++ == 0) first_failure = failure[i];
      continue;
    }
    if (result[i] == 3) ++est.hits[0];
    if (result[i] >= 2) ++est.hits[1];
  }
  check_failure_rate(est.failures, est.n_samples, first_failure);
  const std::size_t valid = est.n_samples - est.failures;
  for (int k = 0; k < 2; ++k) {
    est.frequency[k] = valid > 0 ? static_cast<double>(est.hits[k]) / static_cast<double>(valid) : 0.0;
    est.ci[k] = wilson_interval(est.hits[k], valid);
  }
  est.cap_shift = est.frequency[1] - est.frequency[0];
  est.runtime_s = seconds_since(start);
  return est;
}

bool MartingaleReport::within_band(double sigmas) const {
  return std::all_of(points.begin(), points.end(), [&](const MartingalePoint& p) {
    return std::fabs(p.mean - initial) <= sigmas * p.std_error;
  });
}

MartingaleReport martingale_diagnostic(const EstimationPlan& plan, const LogFunction& log_numerator,
                                       std::span<const double> checkpoints) {
  if (plan.n_samples == 0) throw HarnessError("n_samples must be at least 1");
  if (checkpoints.empty()) throw HarnessError("martingale_diagnostic needs at least one checkpoint");
  std::vector<double> marks(checkpoints.begin(), checkpoints.end());
  std::sort(marks.begin(), marks.end());
  if (!(marks.front() > 0.0)) throw HarnessError("checkpoints must be positive capacities");

  SleParameters params = plan.params;
  params.capacity_cap = marks.back();
  validate(params);
  const PartitionPtr z = make_partition_function(params.partition, params.kappa, static_cast<int>(params.points.size()));
  auto ratio = [&](std::span<const double> x) { return std::exp(log_numerator(x) - z->log_value(x)); };

  const std::size_t k = marks.size();
  std::vector<double> values(plan.n_samples * k, 0.0);
  std::vector<std::size_t> reached(plan.n_samples, 0);
  std::vector<char> failed(plan.n_samples, 0);
  std::vector<std::string> failure(plan.n_samples);
  parallel_for(plan.n_samples, effective_threads(plan.threads), [&](std::size_t i) {
    EvolveOptions options;
    options.checkpoints = marks;
    options.on_checkpoint = [&](std::size_t c, const DrivingState& state) {
      values[i * k + c] = ratio(state.positions);
      reached[i] = c + 1;
    };
    try {
      const SimulationOutcome o = run_sample(params, derive_seed(plan.master_seed, i), options);
      if (o.reason == StopReason::NumericalFailure) {
        failed[i] = 1;
        failure[i] = o.diagnostics.failure;
        return;
      }
      const double frozen = reached[i] < k ? ratio(o.final_positions) : 0.0;
      for (std::size_t c = reached[i]; c < k; ++c) values[i * k + c] = frozen;
    } catch (const std::exception& e) {
      // Ratio evaluation at a near-collision configuration can leave the block's domain.
      failed[i] = 1;
      failure[i] = e.what();
    }
  });

  MartingaleReport report;
  report.n_samples = plan.n_samples;
  report.initial = ratio(params.points);
  std::string first_failure;
  for (std::size_t i = 0; i < plan.n_samples; ++i)
    if (failed[i] && report.failures++ == 0) first_failure = failure[i];
  check_failure_rate(report.failures, report.n_samples, first_failure);
  const std::size_t valid = report.n_samples - report.failures;
  for (std::size_t c = 0; c < k; ++c) {
    MartingalePoint p;
    p.capacity = marks[c];
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < plan.n_samples; ++i) {
      if (failed[i]) continue;
      const double v = values[i * k + c];
      sum += v;
      sum2 += v * v;
      if (reached[i] <= c) ++p.frozen;
    }
    const double nv = static_cast<double>(valid);
    p.mean = valid > 0 ? sum / nv : 0.0;
    const double var = valid > 1 ? std::max(0.0, (sum2 - nv * p.mean * p.mean) / (nv - 1.0)) : 0.0;
    p.std_error = valid > 0 ? std::sqrt(var / nv) : 0.0;
    report.points.push_back(p);
  }
  return report;
}

}  // namespace multisle
