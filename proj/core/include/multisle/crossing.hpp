#pragma once

#include <string>
#include <string_view>

namespace multisle {

/// p_I Z_I(x) / (p_I Z_I(x) + p_II Z_II(x)): probability that the curve from 0
/// pairs with x (configuration I) in the three-point system.
double generic_crossing(double x, double kappa, double p_I, double p_II);

/// Γ(2/3)/Γ(1/3)² ∫_x^1 s^(-2/3) (1-s)^(-2/3) ds.
double cardy_crossing(double x);

/// ∫_x^1 w / ∫_0^1 w with w(y) = (y(1-y))^(2/3) / (1-y+y²)².
double ising_spin_crossing(double x);

/// Closed form of the κ = 16/3 block ratio.
double fk_ising_crossing(double x);

/// κ in [4,8] with Q = 4 cos²(4π/κ); Q in [0,4].
double potts_kappa(double q);

/// generic_crossing(x, potts_kappa(Q), 1, 1).
double potts_crossing(double x, double q);

struct CrossingModel {
  enum class Kind { Percolation, IsingSpin, FkIsing, Potts, Generic };
  Kind kind = Kind::Percolation;
  double q = 2.0;      // Potts
  double kappa = 6.0;  // Generic
  double p_I = 1.0;
  double p_II = 1.0;

  std::string str() const;
  double probability(double x) const;
};

/// "percolation", "ising", "fk_ising", "potts:Q", "generic:κ,pI,pII".
CrossingModel parse_crossing_model(std::string_view text);

}  // namespace multisle
