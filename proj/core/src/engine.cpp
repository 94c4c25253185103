#include "multisle/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "multisle/errors.hpp"

namespace multisle {

namespace {

constexpr double kSpeedSumTolerance = 1e-9;

// Per-thread scratch so the hot loop does not allocate.
struct StepScratch {
  std::vector<std::size_t> index;
  std::vector<double> x;
  std::vector<double> u;
};

StepScratch& scratch() {
  thread_local StepScratch s;
  return s;
}

VelocityField field_from(PartitionPtr z) {
  const double kappa = z->kappa();
  return [z = std::move(z), kappa](std::span<const double> x, std::span<double> u) {
    z->log_gradient(x, u);
    for (double& v : u) v *= kappa;
  };
}

// Reduced partition function after some arches closed. Only the cases that
// arise for n <= 4 have a canonical choice; larger systems fall back to the
// symmetric mixtures of the same sector.
VelocityField reduced_field(double kappa, int alive, int pairs_left) {
  PartitionSelection sel;
  if (pairs_left == 0) {
    sel.kind = PartitionSelection::Kind::Chordal;
  } else if (alive == 2 && pairs_left == 1) {
    sel.kind = PartitionSelection::Kind::Z0;
  } else if ((alive == 3 && pairs_left == 1) || (alive == 4 && pairs_left == 2)) {
    sel.kind = PartitionSelection::Kind::FourPoint;
  } else {
    throw NumericalError("no reduced partition function for " + std::to_string(alive) + " points and " +
                         std::to_string(pairs_left) + " open arches");
  }
  return field_from(make_partition_function(sel, kappa, alive));
}

}  // namespace

void validate(const SleParameters& p) {
  std::vector<std::string> problems;
  if (!(p.kappa > 0.0 && p.kappa < 8.0)) problems.emplace_back("κ must lie in (0,8)");
  const std::size_t n = p.points.size();
  if (n == 0) problems.emplace_back("at least one point is required");
  bool ordered = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p.points[i]) || (i > 0 && !(p.points[i - 1] < p.points[i]))) ordered = false;
  }
  if (!ordered) problems.emplace_back("points must be finite and strictly increasing");
  if (p.speeds.size() != n) {
    problems.emplace_back("expected " + std::to_string(n) + " speeds, got " + std::to_string(p.speeds.size()));
  } else {
    double sum = 0.0;
    bool nonneg = true;
    for (double a : p.speeds) {
      if (!(a >= 0.0) || !std::isfinite(a)) nonneg = false;
      sum += a;
    }
    if (!nonneg) problems.emplace_back("speeds must be non-negative");
    if (std::fabs(sum - 1.0) > kSpeedSumTolerance) problems.emplace_back("speeds must sum to 1");
  }
  if (!(p.dt_base > 0.0)) problems.emplace_back("dt_base must be positive");
  if (!(p.collision_epsilon >= 0.0)) problems.emplace_back("collision_epsilon must be positive (0 selects the default)");
  if (!(p.capacity_cap > 0.0) || std::isnan(p.capacity_cap)) problems.emplace_back("capacity_cap must be positive");
  if (!(p.gap_scale >= 0.0)) problems.emplace_back("gap_scale must be non-negative");
  if (n > 0 && p.kappa > 0.0) {
    try {
      (void)make_partition_function(p.partition, p.kappa, static_cast<int>(n));
    } catch (const DomainError& e) {
      problems.emplace_back(e.what());
    }
  }
  if (ordered && n >= 2 && problems.empty()) {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) gap = std::min(gap, p.points[i] - p.points[i - 1]);
    if (!(gap > effective_collision_epsilon(p))) problems.emplace_back("initial gaps must exceed collision_epsilon");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double effective_collision_epsilon(const SleParameters& p) {
  if (p.collision_epsilon > 0.0) return p.collision_epsilon;
  const double spread = p.points.size() >= 2 ? p.points.back() - p.points.front() : 1.0;
  return 1e-4 * spread;
}

double effective_gap_scale(const SleParameters& p) {
  if (p.gap_scale > 0.0) return p.gap_scale;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < p.points.size(); ++i) gap = std::min(gap, p.points[i] - p.points[i - 1]);
  return std::isfinite(gap) ? gap : 1.0;
}

std::size_t DrivingState::alive_count() const {
  return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), char{1}));
}

double DrivingState::min_alive_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  double prev = 0.0;
  bool have = false;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!alive[i]) continue;
    if (have) gap = std::min(gap, positions[i] - prev);
    prev = positions[i];
    have = true;
  }
  return gap;
}

void step(DrivingState& state, LoewnerChain* chain, double kappa, std::span<const double> speeds,
          const VelocityField& velocity, std::span<const double> gaussians, double dt) {
  StepScratch& s = scratch();
  s.index.clear();
  s.x.clear();
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    if (!state.alive[i]) continue;
    s.index.push_back(i);
    s.x.push_back(state.positions[i]);
  }
  const std::size_t k = s.index.size();
  s.u.assign(k, 0.0);
  if (k > 0) velocity(s.x, s.u);

  // Slits in index order; each one pushes every other alive point.
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t i = s.index[a];
    if (speeds[i] <= 0.0) continue;
    const double cap = 2.0 * speeds[i] * dt;
    const double xi = s.x[a];
    if (chain) chain->append(static_cast<int>(i), xi, cap);
    for (std::size_t b = 0; b < k; ++b)
      if (b != a) s.x[b] = transport_real(s.x[b], xi, cap);
  }

  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t i = s.index[a];
    const double ai = speeds[i];
    s.x[a] += std::sqrt(kappa * ai * dt) * gaussians[i] + ai * dt * s.u[a];
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (!std::isfinite(s.x[a]) || (a > 0 && !(s.x[a - 1] < s.x[a]))) {
      throw NumericalError("ordering lost at t=" + std::to_string(state.t) + " with dt=" + std::to_string(dt) +
                           " (curve " + std::to_string(s.index[a] + 1) + ")");
    }
  }
  for (std::size_t a = 0; a < k; ++a) state.positions[s.index[a]] = s.x[a];
  state.t += dt;
}

std::vector<double> drift_rates(const PartitionFunction& z, std::span<const double> speeds,
                                std::span<const double> x) {
  const std::vector<double> g = grad_log_z(z, x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = z.kappa() * speeds[i] * g[i];
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) r += 2.0 * speeds[j] / (x[i] - x[j]);
    out[i] = r;
  }
  return out;
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::CollisionComplete: return "collision-complete";
    case StopReason::CapacityCap: return "capacity-cap";
    case StopReason::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

SimulationOutcome evolve_until(const SleParameters& params, NoiseSource& noise, const EvolveOptions& options) {
  validate(params);
  PartitionPtr z = make_partition_function(params.partition, params.kappa, static_cast<int>(params.points.size()));
  const int m = z->sector();
  const double kappa = params.kappa;
  return evolve_with_field(
      params, noise, field_from(std::move(z)), m,
      [kappa](int alive, int pairs_left) { return reduced_field(kappa, alive, pairs_left); }, options);
}

SimulationOutcome evolve_with_field(const SleParameters& params, NoiseSource& noise, VelocityField field,
                                    int expected_pairs,
                                    const std::function<VelocityField(int alive, int pairs_left)>& reduce,
                                    const EvolveOptions& options) {
  const std::size_t n = params.points.size();
  const double eps = effective_collision_epsilon(params);
  const double gap_scale = effective_gap_scale(params);
  const double cap = params.capacity_cap;
  const bool record = options.record_chain || options.trace_stride > 0;

  DrivingState state;
  state.positions = params.points;
  state.alive.assign(n, 1);
  std::vector<double> speeds = params.speeds;
  std::vector<double> gaussians(n);

  SimulationOutcome out;
  LoewnerChain* chain = record ? &out.chain : nullptr;
  Diagnostics& diag = out.diagnostics;
  diag.min_gap_seen = state.min_alive_gap();

  std::size_t next_checkpoint = 0;
  auto fire_checkpoints = [&] {
    while (next_checkpoint < options.checkpoints.size() &&
           2.0 * state.t >= options.checkpoints[next_checkpoint] * (1.0 - 1e-12)) {
      if (options.on_checkpoint) options.on_checkpoint(next_checkpoint, state);
      ++next_checkpoint;
    }
  };
  fire_checkpoints();

  out.reason = StopReason::CapacityCap;
  try {
    while (2.0 * state.t < cap * (1.0 - 1e-12)) {
      const double gap = state.min_alive_gap();
      double dt = params.dt_base;
      if (std::isfinite(gap) && gap < gap_scale) dt *= (gap / gap_scale) * (gap / gap_scale);
      dt = std::min(dt, 0.5 * cap - state.t);
      if (next_checkpoint < options.checkpoints.size())
        dt = std::min(dt, 0.5 * options.checkpoints[next_checkpoint] - state.t);
      if (!(dt > 0.0)) throw NumericalError("step size underflow at t=" + std::to_string(state.t));

      noise.fill(gaussians);
      step(state, chain, params.kappa, speeds, field, gaussians, dt);
      ++diag.steps;
      diag.last_dt = dt;
      const double now = state.min_alive_gap();
      diag.min_gap_seen = std::min(diag.min_gap_seen, now);
      if (options.gap_history_stride > 0 && diag.steps % options.gap_history_stride == 0)
        diag.gap_history.emplace_back(state.t, now);

      bool collided = false;
      while (state.alive_count() >= 2) {
        std::size_t left = n, right = n, prev = n;
        double best = eps;
        for (std::size_t i = 0; i < n; ++i) {
          if (!state.alive[i]) continue;
          if (prev != n && state.positions[i] - state.positions[prev] < best) {
            best = state.positions[i] - state.positions[prev];
            left = prev;
            right = i;
          }
          prev = i;
        }
        if (left == n) break;
        state.alive[left] = state.alive[right] = 0;
        state.collisions.emplace_back(static_cast<int>(left) + 1, static_cast<int>(right) + 1);
        collided = true;
      }
      fire_checkpoints();
      if (!collided) continue;

      const int alive = static_cast<int>(state.alive_count());
      const int pairs = static_cast<int>(state.collisions.size());
      if (alive < 2 || (expected_pairs > 0 && pairs >= expected_pairs)) {
        out.reason = StopReason::CollisionComplete;
        break;
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!state.alive[i]) speeds[i] = 0.0;
        sum += speeds[i];
      }
      if (!(sum > 0.0)) throw NumericalError("all surviving curves have zero speed");
      for (double& a : speeds) a /= sum;
      field = reduce(alive, std::max(expected_pairs - pairs, 0));
    }
  } catch (const NumericalError& e) {
    out.reason = StopReason::NumericalFailure;
    diag.failure = e.what();
  }

  out.tau = state.t;
  out.collisions = state.collisions;
  out.final_positions = state.positions;
  try {
    out.arch = classify_outcome(static_cast<int>(n), state.collisions);
  } catch (const InconsistencyError& e) {
    out.reason = StopReason::NumericalFailure;
    diag.failure = e.what();
  }

  if (options.trace_stride > 0 && out.reason != StopReason::NumericalFailure) {
    try {
      out.traces.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        out.traces[i] = trace_points(out.chain, static_cast<int>(i), options.trace_stride);
    } catch (const NumericalError& e) {
      out.traces.clear();
      diag.failure = std::string("trace reconstruction: ") + e.what();
    }
  }
  if (!options.record_chain && options.trace_stride > 0) out.chain.clear();
  return out;
}

}  // namespace multisle
