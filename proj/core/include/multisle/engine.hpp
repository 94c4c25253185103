#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "multisle/arch.hpp"
#include "multisle/loewner.hpp"
#include "multisle/partition.hpp"
#include "multisle/rng.hpp"

namespace multisle {

/// Inputs of one multiple-SLE run.
struct SleParameters {
  double kappa = 6.0;
  std::vector<double> points;  // x_1 < ... < x_n
  std::vector<double> speeds;  // a_i >= 0, Σ a_i = 1
  PartitionSelection partition;
  double dt_base = 1e-4;
  /// Adjacent gap below which a pair is declared collided; 0 selects 1e-4 * (x_n - x_1).
  double collision_epsilon = 0.0;
  /// Run stops once the total capacity 2t reaches this value.
  double capacity_cap = 10.0;
  /// G in δt = dt_base * min(1, (min gap / G)²); 0 selects the initial minimum gap.
  double gap_scale = 0.0;
  std::uint64_t seed = 1;
};

/// Throws ConfigError listing every violated constraint.
void validate(const SleParameters& params);

/// Collision threshold and gap scale after applying the defaults.
double effective_collision_epsilon(const SleParameters& params);
double effective_gap_scale(const SleParameters& params);

/// Driving positions, indexed by original curve (0-based). Dead points keep
/// the position they had when their collision was detected.
struct DrivingState {
  double t = 0.0;
  std::vector<double> positions;
  std::vector<char> alive;
  std::vector<IndexPair> collisions;  // 1-based, in order of detection

  std::size_t alive_count() const;
  /// Smallest gap between consecutive alive points (infinity with fewer than two).
  double min_alive_gap() const;
};

/// Maps alive positions to the velocities U_i = κ ∂_i log Z (same order).
using VelocityField = std::function<void(std::span<const double> x, std::span<double> u)>;

/// One Euler–Maruyama step of length dt.
///
/// For every alive curve i with a_i > 0 a slit of capacity 2 a_i dt is added at
/// its current driving position and all other alive points are transported by
/// the exact slit map (this realises the pairwise 2 a_j dt / (X_i - X_j) drift).
/// Then X_i += sqrt(κ a_i dt) N_i + a_i dt U_i with U evaluated at the start of
/// the step. `gaussians` holds one value per original index.
///
/// Throws NumericalError if the alive points lose their ordering.
void step(DrivingState& state, LoewnerChain* chain, double kappa, std::span<const double> speeds,
          const VelocityField& velocity, std::span<const double> gaussians, double dt);

/// Instantaneous drift rates κ a_i ∂_i log Z + Σ_{j≠i} 2 a_j / (x_i - x_j).
std::vector<double> drift_rates(const PartitionFunction& z, std::span<const double> speeds,
                                std::span<const double> x);

enum class StopReason { CollisionComplete, CapacityCap, NumericalFailure };

const char* to_string(StopReason reason);

struct Diagnostics {
  std::size_t steps = 0;
  double min_gap_seen = 0.0;
  double last_dt = 0.0;
  /// (t, minimum alive gap) sampled every `gap_history_stride` steps.
  std::vector<std::pair<double, double>> gap_history;
  std::string failure;
};

struct SimulationOutcome {
  StopReason reason = StopReason::CapacityCap;
  double tau = 0.0;
  std::vector<IndexPair> collisions;
  ArchConfiguration arch;
  std::vector<double> final_positions;
  std::vector<std::vector<Complex>> traces;  // per curve when requested
  LoewnerChain chain;                        // populated when recorded
  Diagnostics diagnostics;
};

struct EvolveOptions {
  bool record_chain = false;
  /// Emit trace polylines with this stride (implies record_chain); 0 disables.
  std::size_t trace_stride = 0;
  std::size_t gap_history_stride = 0;
  /// Capacities (2t) at which `on_checkpoint` fires; steps are shortened to land on them.
  std::vector<double> checkpoints;
  std::function<void(std::size_t index, const DrivingState& state)> on_checkpoint;
};

/// Runs the coupled system until every expected arch has closed, the
/// capacity cap is reached, or the discretization fails.
///
/// After a collision the pair is removed; if arches remain to be formed the
/// survivors continue with the reduced partition function (Z0 for a last
/// pair, the factorizable form when no arches remain) and renormalized speeds.
SimulationOutcome evolve_until(const SleParameters& params, NoiseSource& noise, const EvolveOptions& options = {});

/// Same loop with a caller-supplied velocity field (e.g. the classical limit).
/// `expected_pairs` plays the role of the sector m; `reduce` supplies the
/// velocity field after a collision (given alive count and pairs still expected).
SimulationOutcome evolve_with_field(const SleParameters& params, NoiseSource& noise, VelocityField field,
                                    int expected_pairs,
                                    const std::function<VelocityField(int alive, int pairs_left)>& reduce,
                                    const EvolveOptions& options = {});

}  // namespace multisle
