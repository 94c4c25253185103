#include "multisle/hypergeometric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "multisle/errors.hpp"

namespace multisle {

namespace {

constexpr double kEps = 1e-17;
constexpr int kMaxTerms = 200000;
// |c-a-b - nearest integer| below this makes the connection coefficients
// cancel badly; those parameters go through Taylor continuation instead.
constexpr double kDegenerateGap = 0.05;

struct SeriesSum {
  double value;
  double derivative;
};

bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

SeriesSum gauss_series(double a, double b, double c, double z) {
  double term = 1.0;
  double sum = 1.0;
  double dsum = 0.0;
  int quiet = 0;
  for (int k = 0; k < kMaxTerms; ++k) {
    const double ak = a + k;
    const double bk = b + k;
    const double ck = c + k;
    // (k+1) t_{k+1} / z, which stays finite at z = 0.
    const double dterm = term * ak * bk / ck;
    dsum += dterm;
    const double ratio = ak * bk / (ck * (k + 1.0)) * z;
    term *= ratio;
    sum += term;
    if (!std::isfinite(sum) || !std::isfinite(dsum)) {
      throw NumericalError("hypergeometric: series overflow");
    }
    const bool small = std::fabs(term) <= kEps * std::fabs(sum) && std::fabs(dterm) <= kEps * std::fabs(dsum);
    quiet = (small && std::fabs(ratio) < 1.0) ? quiet + 1 : 0;
    if (quiet >= 2) return {sum, dsum};
  }
  throw NumericalError("hypergeometric: series did not converge at z=" + std::to_string(z));
}

HypergeometricValue from_plain(double value, double derivative) {
  HypergeometricValue out;
  if (value == 0.0) {
    out.sign = 0;
    out.log_abs = derivative == 0.0 ? 0.0 : std::log(std::fabs(derivative));
    out.scaled_derivative = derivative == 0.0 ? 0.0 : std::copysign(1.0, derivative);
    return out;
  }
  out.log_abs = std::log(std::fabs(value));
  out.sign = value > 0 ? 1 : -1;
  out.scaled_derivative = derivative / std::fabs(value);
  return out;
}

// Signed sum of terms given as (log magnitude, sign), relative to a common scale.
struct LogTerm {
  double log_abs;
  int sign;
};

double scaled_sum(const LogTerm* terms, int count, double scale) {
  double s = 0.0;
  for (int i = 0; i < count; ++i) {
    if (terms[i].sign != 0) s += terms[i].sign * std::exp(terms[i].log_abs - scale);
  }
  return s;
}

LogTerm log_term(double log_coeff, int coeff_sign, double factor) {
  if (coeff_sign == 0 || factor == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
  return {log_coeff + std::log(std::fabs(factor)), coeff_sign * (factor > 0 ? 1 : -1)};
}

// Log of a gamma ratio coefficient; sign 0 when a denominator sits on a pole.
LogTerm gamma_ratio(double n1, double n2, double d1, double d2) {
  if (is_nonpositive_integer(d1) || is_nonpositive_integer(d2)) return {0.0, 0};
  int s1, s2, s3, s4;
  const double l = log_gamma_signed(n1, s1) + log_gamma_signed(n2, s2) - log_gamma_signed(d1, s3) -
                   log_gamma_signed(d2, s4);
  return {l, s1 * s2 * s3 * s4};
}

HypergeometricValue connection_formula(double a, double b, double c, double z) {
  const double s = c - a - b;
  const double w = 1.0 - z;
  const SeriesSum f1 = gauss_series(a, b, 1.0 - s, w);
  const SeriesSum f2 = gauss_series(c - a, c - b, 1.0 + s, w);
  const LogTerm coeff_a = gamma_ratio(c, s, c - a, c - b);
  const LogTerm coeff_b = gamma_ratio(c, -s, a, b);
  const double log_ws = s * std::log(w);

  const LogTerm value_terms[2] = {log_term(coeff_a.log_abs, coeff_a.sign, f1.value),
                                  log_term(coeff_b.log_abs + log_ws, coeff_b.sign, f2.value)};
  const LogTerm deriv_terms[2] = {log_term(coeff_a.log_abs, -coeff_a.sign, f1.derivative),
                                  log_term(coeff_b.log_abs + log_ws, -coeff_b.sign, s * f2.value / w + f2.derivative)};
  const double scale = std::max(value_terms[0].log_abs, value_terms[1].log_abs);
  const double v = scaled_sum(value_terms, 2, scale);
  const double d = scaled_sum(deriv_terms, 2, scale);
  if (!std::isfinite(v) || v == 0.0) throw NumericalError("hypergeometric: connection formula breakdown");
  HypergeometricValue out;
  out.log_abs = scale + std::log(std::fabs(v));
  out.sign = v > 0 ? 1 : -1;
  out.scaled_derivative = d / std::fabs(v);
  return out;
}

// Walk from z = 1/2 towards the target with Taylor expansions of the ODE
// z(1-z)G'' + [c-(a+b+1)z]G' - abG = 0, each within half the distance to z = 1.
HypergeometricValue taylor_continuation(double a, double b, double c, double target) {
  const SeriesSum start = gauss_series(a, b, c, 0.5);
  double scale_log = std::log(std::fabs(start.value));
  double g0 = start.value / std::fabs(start.value);
  double g1 = start.derivative / std::fabs(start.value);
  const double big_s = a + b + 1.0;
  double z0 = 0.5;

  while (z0 < target) {
    const double radius = 1.0 - z0;
    const double h = std::min(target - z0, 0.5 * radius);
    const double p0 = z0 * (1.0 - z0);
    const double p1 = 1.0 - 2.0 * z0;
    const double q0 = c - big_s * z0;

    // coefficients carry their power of h so nothing overflows near z = 1
    double prev = g0;
    double cur = g1 * h;
    double val = g0 + cur;
    double der = g1;
    int quiet = 0;
    int k = 0;
    for (; k < kMaxTerms; ++k) {
      const double kk = k;
      const double next = -((p1 * kk * (kk + 1.0) + q0 * (kk + 1.0)) * cur * h +
                            (-kk * (kk - 1.0) - big_s * kk - a * b) * prev * h * h) /
                          (p0 * (kk + 2.0) * (kk + 1.0));
      const double dterm = (kk + 2.0) * next / h;
      val += next;
      der += dterm;
      prev = cur;
      cur = next;
      const bool small = std::fabs(next) <= kEps * std::fabs(val) && std::fabs(dterm) <= kEps * std::fabs(der);
      quiet = small ? quiet + 1 : 0;
      if (quiet >= 3) break;
    }
    if (k == kMaxTerms || !std::isfinite(val) || val == 0.0) {
      throw NumericalError("hypergeometric: continuation failed near z=" + std::to_string(z0));
    }
    z0 = (h == target - z0) ? target : z0 + h;
    const double mag = std::fabs(val);
    scale_log += std::log(mag);
    g0 = val / mag;
    g1 = der / mag;
  }
  HypergeometricValue out;
  out.log_abs = scale_log;
  out.sign = g0 > 0 ? 1 : -1;
  out.scaled_derivative = g1;
  return out;
}

}  // namespace

double HypergeometricValue::value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

double HypergeometricValue::derivative() const { return scaled_derivative * std::exp(log_abs); }

double log_gamma_signed(double x, int& sign) {
  if (is_nonpositive_integer(x)) throw DomainError("gamma: pole at " + std::to_string(x));
  int s = 1;
  const double l = ::lgamma_r(x, &s);
  sign = s;
  return l;
}

HypergeometricValue hypergeometric_2f1_eval(double a, double b, double c, double x) {
  if (is_nonpositive_integer(c)) throw DomainError("hypergeometric: c is a non-positive integer");
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("hypergeometric: x must lie in [0,1), got " + std::to_string(x));
  if (x <= 0.5) {
    const SeriesSum s = gauss_series(a, b, c, x);
    return from_plain(s.value, s.derivative);
  }
  const double s = c - a - b;
  if (std::fabs(s - std::round(s)) >= kDegenerateGap) return connection_formula(a, b, c, x);
  return taylor_continuation(a, b, c, x);
}

double hypergeometric_2f1(double a, double b, double c, double x) {
  return hypergeometric_2f1_eval(a, b, c, x).value();
}

}  // namespace multisle
