#pragma once

namespace multisle {

/// Gauss hypergeometric function carried in log-magnitude form.
///
/// F = sign * exp(log_abs) and F' = scaled_derivative * exp(log_abs), so
/// large-parameter evaluations (small κ) never overflow.
struct HypergeometricValue {
  double log_abs = 0.0;
  int sign = 1;
  double scaled_derivative = 0.0;

  double value() const;
  double derivative() const;
  /// F'/F.
  double log_derivative() const { return scaled_derivative / sign; }
};

/// 2F1(a,b;c;x) and its derivative for 0 <= x < 1.
///
/// x <= 1/2 sums the Gauss series directly. Above 1/2 the 1-x connection
/// formula is used when c-a-b is safely non-integer; otherwise the series
/// is analytically continued by re-centred Taylor expansions of the
/// hypergeometric ODE. Relative accuracy is about 1e-13.
///
/// Throws DomainError for c a non-positive integer or x outside [0,1),
/// NumericalError if a series fails to converge.
HypergeometricValue hypergeometric_2f1_eval(double a, double b, double c, double x);

double hypergeometric_2f1(double a, double b, double c, double x);

/// log|Γ(x)| together with the sign of Γ(x); x must not be a pole.
double log_gamma_signed(double x, int& sign);

}  // namespace multisle
