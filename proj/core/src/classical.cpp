#include "multisle/classical.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <optional>

#include "multisle/errors.hpp"
#include "multisle/partition.hpp"
#include "multisle/rng.hpp"

namespace multisle {

namespace {

using Wide = boost::multiprecision::cpp_bin_float_50;

constexpr double kSeedKappa = 0.05;
constexpr double kMergeTolerance = 1e-8;
constexpr int kMaxIterations = 400;

double min_gap(std::span<const double> x) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) g = std::min(g, x[i] - x[i - 1]);
  return std::isfinite(g) ? g : 1.0;
}

template <class T>
struct NewtonResult {
  std::vector<T> u;
  bool converged = false;
  std::string message;
};

// Newton for F_i(U) = ½U_i² + 2Σ_j (U_j d_ij - 3 d_ij²), d_ij = 1/(x_j - x_i).
// Some branches are multiple roots (singular Jacobian at the solution), where
// Newton is only linear and stalls at a rounding floor well above step_tol.
// Such iterates count as converged once the residual is below `accept`.
template <class T>
NewtonResult<T> newton(std::span<const double> x, std::vector<T> u, T step_tol, T residual_floor, T accept) {
  const std::size_t n = x.size();
  std::vector<T> d(n * n, T(0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) d[i * n + j] = T(1) / (T(x[j]) - T(x[i]));

  using std::abs;
  std::vector<T> f(n), jac(n * n), delta(n);
  NewtonResult<T> out;
  T fmax(0);
  // past the stall the iterates can wander off again, so keep the best one
  std::vector<T> best = u;
  T best_f(-1);
  for (int it = 0; it < kMaxIterations; ++it) {
    fmax = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      T s = u[i] * u[i] / 2;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) s += 2 * (u[j] * d[i * n + j] - 3 * d[i * n + j] * d[i * n + j]);
      f[i] = s;
      fmax = std::max<T>(fmax, abs(s));
      for (std::size_t k = 0; k < n; ++k) jac[i * n + k] = k == i ? u[i] : 2 * d[i * n + k];
    }
    if (best_f < T(0) || fmax < best_f) {
      best_f = fmax;
      best = u;
    }
    if (fmax <= residual_floor) {
      out.converged = true;
      break;
    }
    // Gaussian elimination with partial pivoting on [J | F].
    delta = f;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < n; ++r)
        if (abs(jac[r * n + c]) > abs(jac[p * n + c])) p = r;
      if (jac[p * n + c] == 0) {
        out.converged = fmax <= accept;
        out.message = "singular Jacobian";
        out.u = std::move(u);
        return out;
      }
      if (p != c) {
        for (std::size_t k = 0; k < n; ++k) std::swap(jac[c * n + k], jac[p * n + k]);
        std::swap(delta[c], delta[p]);
      }
      for (std::size_t r = c + 1; r < n; ++r) {
        const T factor = jac[r * n + c] / jac[c * n + c];
        for (std::size_t k = c; k < n; ++k) jac[r * n + k] -= factor * jac[c * n + k];
        delta[r] -= factor * delta[c];
      }
    }
    for (std::size_t c = n; c-- > 0;) {
      T s = delta[c];
      for (std::size_t k = c + 1; k < n; ++k) s -= jac[c * n + k] * delta[k];
      delta[c] = s / jac[c * n + c];
    }
    T dmax(0);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] -= delta[i];
      dmax = std::max<T>(dmax, abs(delta[i]));
    }
    using std::isfinite;
    if (!isfinite(static_cast<double>(dmax))) {
      out.message = "diverged";
      out.u = std::move(u);
      return out;
    }
    if (dmax <= step_tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    out.converged = best_f <= accept;
    out.message = "no convergence in " + std::to_string(kMaxIterations) + " iterations";
    u = std::move(best);
  }
  out.u = std::move(u);
  return out;
}

std::optional<std::vector<double>> solve_wide(std::span<const double> x, std::vector<Wide> u, std::string* message) {
  const double scale = 1.0 / min_gap(x);
  auto r = newton<Wide>(x, std::move(u), Wide(1e-30) * scale, Wide(1e-45) * scale * scale,
                        Wide(1e-22) * scale * scale);
  if (!r.converged) {
    if (message) *message = r.message;
    return std::nullopt;
  }
  std::vector<double> out(r.u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(r.u[i]);
  return out;
}

std::vector<Wide> widen(std::span<const double> v) { return std::vector<Wide>(v.begin(), v.end()); }

// κ∂log Z of the factorizable function is Σ_j 2/(x_i - x_j) for every κ. That
// branch is a degenerate root where Newton cannot improve on a double-rounded
// seed, so it is formed directly in extended precision.
std::vector<Wide> chordal_seed(std::span<const double> x) {
  std::vector<Wide> u(x.size(), Wide(0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) u[i] += Wide(2) / (Wide(x[i]) - Wide(x[j]));
  return u;
}

std::vector<PartitionSelection> seed_selections(int n) {
  using Kind = PartitionSelection::Kind;
  std::vector<PartitionSelection> out;
  auto add = [&](Kind k, double a = 1.0, double b = 1.0) {
    PartitionSelection s;
    s.kind = k;
    s.first = a;
    s.second = b;
    out.push_back(s);
  };
  add(Kind::Chordal);
  // The two-point mixture is not homogeneous, so it seeds no branch of its own.
  if (n == 2) {
    add(Kind::Z0);
    add(Kind::Z2);
  }
  if (n == 3) add(Kind::Triple);
  if (n == 3 || n == 4) {
    add(Kind::FourPoint, 1.0, 0.0);
    add(Kind::FourPoint, 0.0, 1.0);
    add(Kind::FourPoint, 1.0, 1.0);
  }
  return out;
}

void merge(std::vector<ClassicalGradient>& branches, std::span<const double> x, std::vector<double> u,
           const std::string& label, int sector) {
  const double tol = kMergeTolerance / min_gap(x);
  for (ClassicalGradient& b : branches) {
    double dist = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dist = std::max(dist, std::fabs(u[i] - b.values[i]));
    if (dist <= tol) {
      if (b.label.find(label) == std::string::npos) b.label += "," + label;
      b.sector = std::max(b.sector, sector);
      return;
    }
  }
  branches.push_back({std::vector<double>(x.begin(), x.end()), std::move(u), label, sector});
}

std::vector<double> chordal_branch(std::span<const double> x) {
  std::vector<double> u(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) u[i] += 2.0 / (x[i] - x[j]);
  return u;
}

double max_residual(std::span<const double> u, std::span<const double> x) {
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r = std::max(r, std::fabs(classical_residual(u, x, i)));
  return r;
}

}  // namespace

double classical_residual(std::span<const double> u, std::span<const double> x, std::size_t i, ResidualForm form) {
  double s = 0.5 * u[i] * u[i];
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const double d = 1.0 / (x[j] - x[i]);
    s += 2.0 * ((form == ResidualForm::Corrected ? u[j] : u[i]) * d - 3.0 * d * d);
  }
  return s;
}

ClassicalSolveReport solve_classical_report(std::span<const double> x) {
  require_ordered(x, "solve_classical_gradients");
  const int n = static_cast<int>(x.size());
  if (n < 1 || n > 6) throw DomainError("solve_classical_gradients: supports 1 <= n <= 6");
  ClassicalSolveReport report;

  for (const PartitionSelection& sel : seed_selections(n)) {
    std::vector<Wide> seed;
    int sector = 0;
    try {
      const PartitionPtr z = make_partition_function(sel, kSeedKappa, n);
      sector = z->sector();
      if (sel.kind == PartitionSelection::Kind::Chordal || sel.kind == PartitionSelection::Kind::Triple) {
        seed = chordal_seed(x);
      } else {
        std::vector<double> g = grad_log_z(*z, x);
        for (double& v : g) v *= kSeedKappa;
        seed = widen(g);
      }
    } catch (const std::exception& e) {
      report.skipped.push_back(sel.str() + ": seed evaluation failed: " + e.what());
      continue;
    }
    std::string message;
    if (auto u = solve_wide(x, std::move(seed), &message)) {
      merge(report.branches, x, std::move(*u), sel.str(), sector);
    } else {
      report.skipped.push_back(sel.str() + ": " + message);
    }
  }

  if (n == 2) {
    const double g = 1.0 / (x[1] - x[0]);
    for (double c : {1.0, 4.0, 10.0}) {
      for (int s1 : {1, -1}) {
        for (int s2 : {1, -1}) {
          const double seed[2] = {s1 * c * g, s2 * c * g};
          const std::string label = std::string("sign(") + (s1 > 0 ? '+' : '-') + ',' + (s2 > 0 ? '+' : '-') + ')';
          std::string message;
          if (auto u = solve_wide(x, widen(seed), &message)) {
            merge(report.branches, x, std::move(*u), label, -1);
          } else {
            report.skipped.push_back(label + " x" + std::to_string(static_cast<int>(c)) + ": " + message);
          }
        }
      }
    }
  }
  std::sort(report.branches.begin(), report.branches.end(),
            [](const ClassicalGradient& a, const ClassicalGradient& b) { return a.values > b.values; });
  return report;
}

std::vector<ClassicalGradient> solve_classical_gradients(std::span<const double> x) {
  return solve_classical_report(x).branches;
}

std::vector<double> refine_classical_gradient(std::span<const double> x, std::span<const double> guess) {
  require_ordered(x, "refine_classical_gradient");
  if (guess.size() != x.size()) throw DomainError("refine_classical_gradient: size mismatch");
  for (double g : guess)
    if (!std::isfinite(g)) throw DomainError("refine_classical_gradient: guess must be finite");
  std::string message;
  auto u = solve_wide(x, widen(guess), &message);
  if (!u) throw NumericalError("refine_classical_gradient: " + message);
  return *u;
}

ClassicalRun integrate_classical(const ClassicalGradient& branch, const ClassicalRunOptions& options) {
  const std::size_t n = branch.points.size();
  SleParameters params;
  params.kappa = 1.0;  // only scales the (zero) noise
  params.points = branch.points;
  params.speeds = options.speeds.empty() ? std::vector<double>(n, 1.0 / static_cast<double>(n)) : options.speeds;
  params.partition.kind = PartitionSelection::Kind::Chordal;
  params.dt_base = options.dt_base;
  params.collision_epsilon = options.collision_epsilon;
  params.capacity_cap = options.capacity_cap;
  validate(params);
  if (branch.values.size() != n) throw DomainError("integrate_classical: branch size mismatch");

  struct Tracker {
    std::vector<long double> u;
    double residual = 0.0;
  };
  auto tracker = std::make_shared<Tracker>();
  tracker->u.assign(branch.values.begin(), branch.values.end());
  tracker->residual = max_residual(branch.values, branch.points);

  VelocityField field = [tracker](std::span<const double> x, std::span<double> out) {
    const double scale = 1.0 / min_gap(x);
    const long double eps = std::numeric_limits<long double>::epsilon();
    auto r = newton<long double>(x, tracker->u, 1e-14L * scale, 64 * eps * scale * scale, 1e-12L * scale * scale);
    if (!r.converged) throw NumericalError("classical branch lost: " + r.message);
    std::vector<double> u(r.u.begin(), r.u.end());
    double jump = 0.0, size = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      jump = std::max(jump, std::fabs(u[i] - static_cast<double>(tracker->u[i])));
      size = std::max(size, std::fabs(u[i]));
    }
    const double residual = max_residual(u, x);
    const double floor = 1e-9 * scale * scale;
    if (residual > 10.0 * std::max(tracker->residual, floor) || jump > 0.25 * size + 1e-9 * scale) {
      throw NumericalError("classical branch jump: residual " + std::to_string(residual) + ", change " +
                           std::to_string(jump));
    }
    tracker->u = std::move(r.u);
    tracker->residual = residual;
    std::copy(u.begin(), u.end(), out.begin());
  };

  auto reduce = [](int alive, int pairs_left) -> VelocityField {
    if (pairs_left == 0) {
      return [](std::span<const double> x, std::span<double> out) {
        const auto u = chordal_branch(x);
        std::copy(u.begin(), u.end(), out.begin());
      };
    }
    if (alive == 2 && pairs_left == 1) {
      return [](std::span<const double> x, std::span<double> out) {
        const double g = x[1] - x[0];
        out[0] = 6.0 / g;
        out[1] = -6.0 / g;
      };
    }
    throw NumericalError("no reduced classical branch for " + std::to_string(alive) + " points");
  };

  ClassicalRun run;
  EvolveOptions evolve;
  evolve.record_chain = options.record_chain;
  const std::size_t samples = std::max<std::size_t>(options.path_samples, 1);
  for (std::size_t k = 1; k <= samples; ++k)
    evolve.checkpoints.push_back(options.capacity_cap * static_cast<double>(k) / static_cast<double>(samples));
  evolve.on_checkpoint = [&run](std::size_t, const DrivingState& state) {
    run.path.emplace_back(2.0 * state.t, state.positions);
  };
  run.path.emplace_back(0.0, branch.points);
  ZeroNoise noise;
  run.outcome = evolve_with_field(params, noise, std::move(field), std::max(branch.sector, 0), reduce, evolve);
  if (run.path.back().first < 2.0 * run.outcome.tau) run.path.emplace_back(2.0 * run.outcome.tau, run.outcome.final_positions);
  return run;
}

}  // namespace multisle
