#include "multisle/crossing.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "multisle/errors.hpp"
#include "multisle/number.hpp"
#include "multisle/partition.hpp"

namespace multisle {

namespace {

constexpr double kAbsTolerance = 1e-10;
constexpr unsigned kMaxDepth = 20;

void require_unit_interval(double x, const char* what) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError(std::string(what) + ": x must lie in (0,1)");
}

// ∫_x^1 f(s, 1-s) ds for integrands with algebraic endpoint behaviour.
// Near 0 we integrate in u with s = u³, near 1 in v with 1-s = v³; both
// pieces are smooth, so a plain adaptive Gauss-Kronrod rule converges fast.
template <class F>
double upper_tail(F f, double x) {
  using boost::math::quadrature::gauss_kronrod;
  auto left = [&](double u) {
    const double s = u * u * u;
    return 3.0 * u * u * f(s, 1.0 - s);
  };
  auto right = [&](double v) {
    const double sbar = v * v * v;
    return 3.0 * v * v * f(1.0 - sbar, sbar);
  };
  const double mid = std::cbrt(0.5);
  double err = 0.0;
  if (x >= 0.5) return gauss_kronrod<double, 15>::integrate(right, 0.0, std::cbrt(1.0 - x), kMaxDepth, kAbsTolerance, &err);
  return gauss_kronrod<double, 15>::integrate(left, std::cbrt(x), mid, kMaxDepth, kAbsTolerance, &err) +
         gauss_kronrod<double, 15>::integrate(right, 0.0, mid, kMaxDepth, kAbsTolerance, &err);
}

double cardy_integrand(double s, double sbar) { return std::pow(s * sbar, -2.0 / 3.0); }

double ising_weight(double y, double ybar) {
  const double d = 1.0 - y * ybar;  // 1 - y + y²
  return std::pow(y * ybar, 2.0 / 3.0) / (d * d);
}

double ising_total() {
  static const double total = upper_tail(ising_weight, 0.0);
  return total;
}

double parse_number(std::string_view s, std::string_view context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DomainError("crossing model '" + std::string(context) + "': bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

double generic_crossing(double x, double kappa, double p_I, double p_II) {
  require_unit_interval(x, "generic_crossing");
  if (!(p_I >= 0.0 && p_II >= 0.0) || p_I + p_II == 0.0)
    throw DomainError("generic_crossing: weights must be non-negative and not both zero");
  if (p_II == 0.0) return 1.0;
  if (p_I == 0.0) return 0.0;
  const FourPointBlock block(kappa);
  // Logistic form of the ratio avoids overflow of either block.
  const double d = std::log(p_II) + block.log_pure_II(x) - std::log(p_I) - block.log_pure_I(x);
  return 1.0 / (1.0 + std::exp(d));
}

double cardy_crossing(double x) {
  require_unit_interval(x, "cardy_crossing");
  static const double norm = std::tgamma(2.0 / 3.0) / (std::tgamma(1.0 / 3.0) * std::tgamma(1.0 / 3.0));
  return norm * upper_tail(cardy_integrand, x);
}

double ising_spin_crossing(double x) {
  require_unit_interval(x, "ising_spin_crossing");
  return upper_tail(ising_weight, x) / ising_total();
}

double fk_ising_crossing(double x) {
  require_unit_interval(x, "fk_ising_crossing");
  const double y = 1.0 - x;
  const double top = std::sqrt(y + y * std::sqrt(y));
  return top / (std::sqrt(x + x * std::sqrt(x)) + top);
}

double potts_kappa(double q) {
  if (!(q >= 0.0 && q <= 4.0)) throw DomainError("potts_kappa: Q must lie in [0,4]");
  return 4.0 * std::numbers::pi / std::acos(-0.5 * std::sqrt(q));
}

double potts_crossing(double x, double q) { return generic_crossing(x, potts_kappa(q), 1.0, 1.0); }

std::string CrossingModel::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Percolation: return "percolation";
    case Kind::IsingSpin: return "ising";
    case Kind::FkIsing: return "fk_ising";
    case Kind::Potts: os << "potts:" << format_number(q); break;
    case Kind::Generic:
      os << "generic:" << format_number(kappa) << ',' << format_number(p_I) << ',' << format_number(p_II);
      break;
  }
  return os.str();
}

double CrossingModel::probability(double x) const {
  switch (kind) {
    case Kind::Percolation: return cardy_crossing(x);
    case Kind::IsingSpin: return ising_spin_crossing(x);
    case Kind::FkIsing: return fk_ising_crossing(x);
    case Kind::Potts: return potts_crossing(x, q);
    case Kind::Generic: return generic_crossing(x, kappa, p_I, p_II);
  }
  throw DomainError("unknown crossing model");
}

CrossingModel parse_crossing_model(std::string_view text) {
  CrossingModel m;
  using Kind = CrossingModel::Kind;
  if (text == "percolation") { m.kind = Kind::Percolation; return m; }
  if (text == "ising") { m.kind = Kind::IsingSpin; return m; }
  if (text == "fk_ising") { m.kind = Kind::FkIsing; return m; }
  if (text.starts_with("potts:")) {
    m.kind = Kind::Potts;
    m.q = parse_number(text.substr(6), text);
    (void)potts_kappa(m.q);
    return m;
  }
  if (text.starts_with("generic:")) {
    m.kind = Kind::Generic;
    std::string_view rest = text.substr(8);
    double v[3];
    for (int k = 0; k < 3; ++k) {
      const auto comma = rest.find(',');
      if ((k < 2) != (comma != std::string_view::npos))
        throw DomainError("crossing model '" + std::string(text) + "': expected generic:κ,pI,pII");
      v[k] = parse_number(rest.substr(0, comma), text);
      if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
    }
    m.kappa = v[0];
    m.p_I = v[1];
    m.p_II = v[2];
    if (!(m.kappa > 0.0 && m.kappa < 8.0)) throw DomainError("κ must lie in (0,8)");
    return m;
  }
  throw DomainError("unknown crossing model '" + std::string(text) +
                    "' (expected percolation, ising, fk_ising, potts:Q, generic:κ,pI,pII)");
}

}  // namespace multisle
