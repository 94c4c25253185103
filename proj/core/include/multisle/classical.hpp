#pragma once

#include <span>
#include <string>
#include <vector>

#include "multisle/engine.hpp"

namespace multisle {

/// Which cross term the residual uses. `Printed` keeps U_i in the sum, a form
/// that the exact two-point gradients do not satisfy; it exists for comparison.
enum class ResidualForm { Corrected, Printed };

/// ½U_i² + 2Σ_{j≠i} (U_j/(x_j-x_i) - 3/(x_j-x_i)²), i 0-based.
double classical_residual(std::span<const double> u, std::span<const double> x, std::size_t i,
                          ResidualForm form = ResidualForm::Corrected);

/// One real solution U of the κ→0 system at fixed points.
struct ClassicalGradient {
  std::vector<double> points;
  std::vector<double> values;
  /// Seeds that converged here, e.g. "Z0" or "sign(+,-)".
  std::string label;
  /// Arch count of the seeding partition function, or -1 when only sign seeds hit it.
  int sector = -1;
};

struct ClassicalSolveReport {
  std::vector<ClassicalGradient> branches;
  /// One line per seed that was skipped (non-convergence, singular Jacobian).
  std::vector<std::string> skipped;
};

/// Newton iteration in 50-digit arithmetic from κ ∇log Z at κ = 0.05 for every
/// partition function defined on n points, plus sign seeds for n = 2.
/// Solutions closer than 1e-8 (relative to the gradient scale) are merged.
ClassicalSolveReport solve_classical_report(std::span<const double> x);
std::vector<ClassicalGradient> solve_classical_gradients(std::span<const double> x);

/// Newton refinement of a nearby guess; throws NumericalError if it does not converge.
std::vector<double> refine_classical_gradient(std::span<const double> x, std::span<const double> guess);

struct ClassicalRunOptions {
  std::vector<double> speeds;  // defaults to equal speeds
  double capacity_cap = 1.0;
  double dt_base = 1e-4;
  double collision_epsilon = 0.0;
  std::size_t path_samples = 100;
  bool record_chain = false;
};

struct ClassicalRun {
  SimulationOutcome outcome;
  /// (2t, positions) at `path_samples` evenly spaced capacities up to the stop.
  std::vector<std::pair<double, std::vector<double>>> path;
};

/// Deterministic evolution dX_i = U_i a_i dt + Σ_{j≠i} 2 a_j dt/(X_i - X_j) with U
/// re-solved on the chosen branch at every step (Newton warm start). A step whose
/// converged residual jumps by more than 10x, or whose U leaves the neighbourhood
/// of the prediction, stops the run as a numerical failure.
ClassicalRun integrate_classical(const ClassicalGradient& branch, const ClassicalRunOptions& options);

}  // namespace multisle
