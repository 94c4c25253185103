#include "multisle/partition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "multisle/errors.hpp"
#include "multisle/hypergeometric.hpp"

namespace multisle {

namespace {

void require_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa < 8.0)) throw DomainError("κ must lie in (0,8)");
}

double min_gap(std::span<const double> x) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) g = std::min(g, x[i] - x[i - 1]);
  return g;
}

double log_add(double la, double lb) {
  if (la == -std::numeric_limits<double>::infinity()) return lb;
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  const double m = std::max(la, lb);
  return m + std::log(std::exp(la - m) + std::exp(lb - m));
}

// ---------------------------------------------------------------------------

class PairFunction final : public PartitionFunction {
 public:
  PairFunction(PairVariant variant, double kappa)
      : PartitionFunction(kappa),
        variant_(variant),
        exponent_(variant == PairVariant::Z0 ? (kappa - 6.0) / kappa : 2.0 / kappa) {}

  std::string label() const override { return variant_ == PairVariant::Z0 ? "Z0" : "Z2"; }
  int arity() const override { return 2; }
  int sector() const override { return variant_ == PairVariant::Z0 ? 1 : 0; }
  bool analytic_gradient() const override { return true; }
  std::optional<double> scaling_weight() const override { return exponent_; }

  double log_value(std::span<const double> x) const override { return exponent_ * std::log(x[1] - x[0]); }

  void log_gradient(std::span<const double> x, std::span<double> out) const override {
    const double d = exponent_ / (x[1] - x[0]);
    out[0] = -d;
    out[1] = d;
  }

 private:
  PairVariant variant_;
  double exponent_;
};

class MixtureFunction final : public PartitionFunction {
 public:
  MixtureFunction(double lambda, double mu, double kappa)
      : PartitionFunction(kappa),
        lambda_(lambda),
        mu_(mu),
        alpha_((kappa - 6.0) / kappa),
        beta_(2.0 / kappa) {}

  std::string label() const override {
    std::ostringstream os;
    os << "mixture:" << lambda_ << ',' << mu_;
    return os.str();
  }
  int arity() const override { return 2; }
  int sector() const override { return 1; }
  bool analytic_gradient() const override { return true; }
  std::optional<double> scaling_weight() const override {
    if (mu_ == 0.0) return alpha_;
    if (lambda_ == 0.0) return beta_;
    return std::nullopt;
  }

  double log_value(std::span<const double> x) const override {
    const double lg = std::log(x[1] - x[0]);
    const double l0 = lambda_ > 0 ? std::log(lambda_) + alpha_ * lg : -std::numeric_limits<double>::infinity();
    const double l2 = mu_ > 0 ? std::log(mu_) + beta_ * lg : -std::numeric_limits<double>::infinity();
    return log_add(l0, l2);
  }

  void log_gradient(std::span<const double> x, std::span<double> out) const override {
    const double g = x[1] - x[0];
    const double lg = std::log(g);
    // Weights of the two components relative to the larger one.
    const double l0 = lambda_ > 0 ? std::log(lambda_) + alpha_ * lg : -std::numeric_limits<double>::infinity();
    const double l2 = mu_ > 0 ? std::log(mu_) + beta_ * lg : -std::numeric_limits<double>::infinity();
    const double m = std::max(l0, l2);
    const double w0 = std::exp(l0 - m);
    const double w2 = std::exp(l2 - m);
    const double d = (alpha_ * w0 + beta_ * w2) / ((w0 + w2) * g);
    out[0] = -d;
    out[1] = d;
  }

 private:
  double lambda_, mu_, alpha_, beta_;
};

class ChordalFunction final : public PartitionFunction {
 public:
  ChordalFunction(int n, bool triple, double kappa)
      : PartitionFunction(kappa), n_(n), triple_(triple), exponent_(2.0 / kappa) {}

  std::string label() const override { return triple_ ? "triple" : "chordal"; }
  int arity() const override { return n_; }
  int sector() const override { return 0; }
  bool analytic_gradient() const override { return true; }
  std::optional<double> scaling_weight() const override { return h_weight(n_, kappa()) - n_ * h_weight(1, kappa()); }

  double log_value(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j) s += std::log(x[j] - x[i]);
    return exponent_ * s;
  }

  void log_gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) s += 1.0 / (x[i] - x[j]);
      out[i] = exponent_ * s;
    }
  }

 private:
  int n_;
  bool triple_;
  double exponent_;
};

class FourPointFunction final : public PartitionFunction {
 public:
  FourPointFunction(int n, double kappa, double p_I, double p_II)
      : PartitionFunction(kappa), n_(n), p_I_(p_I), p_II_(p_II), exponent_((kappa - 6.0) / kappa), block_(kappa) {}

  std::string label() const override {
    std::ostringstream os;
    os << "fourpoint:" << p_I_ << ',' << p_II_;
    return os.str();
  }
  int arity() const override { return n_; }
  int sector() const override { return n_ == 4 ? 2 : 1; }
  bool analytic_gradient() const override { return true; }
  std::optional<double> scaling_weight() const override { return (n_ == 4 ? 2.0 : 1.0) * exponent_; }

  double log_value(std::span<const double> x) const override {
    const double d31 = x[2] - x[0];
    const double d21 = x[1] - x[0];
    double u = d21 / d31;
    double log_pref = std::log(d31);
    if (n_ == 4) {
      const double d42 = x[3] - x[1];
      u *= (x[3] - x[2]) / d42;
      log_pref += std::log(d42);
    }
    return exponent_ * log_pref + block_.mixture(u, p_I_, p_II_).log_value;
  }

  void log_gradient(std::span<const double> x, std::span<double> out) const override {
    const double d21 = x[1] - x[0];
    const double d31 = x[2] - x[0];
    double u = d21 / d31;
    // ∂ log u / ∂x_i and ∂ log(prefactor) / ∂x_i.
    double du[4] = {-1.0 / d21 + 1.0 / d31, 1.0 / d21, -1.0 / d31, 0.0};
    double dp[4] = {-1.0 / d31, 0.0, 1.0 / d31, 0.0};
    if (n_ == 4) {
      const double d42 = x[3] - x[1];
      const double d43 = x[3] - x[2];
      u *= d43 / d42;
      du[1] += 1.0 / d42;
      du[2] -= 1.0 / d43;
      du[3] = 1.0 / d43 - 1.0 / d42;
      dp[1] = -1.0 / d42;
      dp[3] = 1.0 / d42;
    }
    const double u_dlog = u * block_.mixture(u, p_I_, p_II_).dlog_du;
    for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = exponent_ * dp[i] + u_dlog * du[i];
  }

 private:
  int n_;
  double p_I_, p_II_, exponent_;
  FourPointBlock block_;
};

bool parse_number(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

// ---------------------------------------------------------------------------

double h_weight(int m, double kappa) {
  require_kappa(kappa);
  if (m < 0) throw DomainError("h_weight: m must be non-negative");
  return m * (2.0 * (m + 2) - kappa) / (2.0 * kappa);
}

double central_charge(double kappa) {
  require_kappa(kappa);
  return (6.0 - kappa) * (3.0 * kappa - 8.0) / (2.0 * kappa);
}

double z_pair(double x1, double x2, PairVariant variant, double kappa) {
  require_kappa(kappa);
  if (!(x1 < x2)) throw DomainError("z_pair: requires x1 < x2");
  const double e = variant == PairVariant::Z0 ? (kappa - 6.0) / kappa : 2.0 / kappa;
  return std::pow(x2 - x1, e);
}

double z_mixture(double x1, double x2, double lambda, double mu, double kappa) {
  if (!(lambda >= 0.0 && mu >= 0.0) || lambda + mu == 0.0) {
    throw DomainError("z_mixture: coefficients must be non-negative and not both zero");
  }
  return lambda * z_pair(x1, x2, PairVariant::Z0, kappa) + mu * z_pair(x1, x2, PairVariant::Z2, kappa);
}

double z_chordal_factorizable(std::span<const double> x, double kappa) {
  require_kappa(kappa);
  require_ordered(x, "z_chordal_factorizable");
  return std::exp(ChordalFunction(static_cast<int>(x.size()), false, kappa).log_value(x));
}

FourPointBlock::FourPointBlock(double kappa)
    : kappa_(kappa), a_(4.0 / kappa), b_((12.0 - kappa) / kappa), c_(8.0 / kappa), p_(2.0 / kappa) {
  if (!(kappa > 0.0 && kappa < 8.0)) throw DomainError("four-point blocks need kappa in (0,8)");
  int s1, s2, s3, s4;
  log_norm_ = log_gamma_signed(a_, s1) + log_gamma_signed(b_, s2) - log_gamma_signed(c_, s3) -
              log_gamma_signed(a_ + b_ - c_, s4);
}

double FourPointBlock::log_pure_II(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("pure block: x must lie in (0,1)");
  const HypergeometricValue f = hypergeometric_2f1_eval(a_, b_, c_, u);
  if (f.sign <= 0) throw NumericalError("pure block: non-positive hypergeometric value");
  return log_norm_ + p_ * (std::log(u) + std::log1p(-u)) + f.log_abs;
}

double FourPointBlock::log_pure_I(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("pure block: x must lie in (0,1)");
  return log_pure_II(1.0 - u);
}

FourPointBlock::LogEval FourPointBlock::mixture(double u, double p_I, double p_II) const {
  if (!(u > 0.0 && u < 1.0)) throw NumericalError("four-point: cross-ratio left (0,1)");
  const double v = 1.0 - u;
  const double common = log_norm_ + p_ * (std::log(u) + std::log(v));
  const double ninf = -std::numeric_limits<double>::infinity();
  double l1 = ninf, l2 = ninf, d1 = 0.0, d2 = 0.0;
  if (p_I > 0.0) {
    const HypergeometricValue f = hypergeometric_2f1_eval(a_, b_, c_, v);
    if (f.sign <= 0) throw NumericalError("four-point: non-positive hypergeometric value");
    l1 = std::log(p_I) + common + f.log_abs;
    d1 = p_ / u - p_ / v - f.log_derivative();
  }
  if (p_II > 0.0) {
    const HypergeometricValue f = hypergeometric_2f1_eval(a_, b_, c_, u);
    if (f.sign <= 0) throw NumericalError("four-point: non-positive hypergeometric value");
    l2 = std::log(p_II) + common + f.log_abs;
    d2 = p_ / u - p_ / v + f.log_derivative();
  }
  const double m = std::max(l1, l2);
  const double w1 = p_I > 0.0 ? std::exp(l1 - m) : 0.0;
  const double w2 = p_II > 0.0 ? std::exp(l2 - m) : 0.0;
  return {m + std::log(w1 + w2), (w1 * d1 + w2 * d2) / (w1 + w2)};
}

double z_pure_II(double x, double kappa) { return std::exp(FourPointBlock(kappa).log_pure_II(x)); }

double z_pure_I(double x, double kappa) { return std::exp(FourPointBlock(kappa).log_pure_I(x)); }

double harmonic_ratio(double x1, double x2, double x3, double x4) {
  if (!(x1 < x2 && x2 < x3 && x3 < x4)) throw DomainError("harmonic_ratio: points must be strictly increasing");
  const double first = (x2 - x1) / (x3 - x1);
  if (std::isinf(x4)) return first;
  return first * ((x4 - x3) / (x4 - x2));
}

double z_four_point(const std::array<double, 4>& points, double kappa, double p_I, double p_II) {
  if (!(p_I >= 0.0 && p_II >= 0.0) || p_I + p_II == 0.0) {
    throw DomainError("z_four_point: weights must be non-negative and not both zero");
  }
  const double u = harmonic_ratio(points[0], points[1], points[2], points[3]);
  const FourPointBlock block(kappa);
  double log_pref = std::log(points[2] - points[0]);
  if (!std::isinf(points[3])) log_pref += std::log(points[3] - points[1]);
  return std::exp((kappa - 6.0) / kappa * log_pref + block.mixture(u, p_I, p_II).log_value);
}

// ---------------------------------------------------------------------------

void PartitionFunction::log_gradient(std::span<const double> x, std::span<double> out) const {
  finite_difference_log_gradient(*this, x, out);
}

std::optional<double> PartitionFunction::scaling_weight() const { return std::nullopt; }

double PartitionFunction::value(std::span<const double> x) const { return std::exp(log_value(x)); }

void require_ordered(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw DomainError(std::string(what) + ": points must be finite");
    if (i > 0 && !(x[i - 1] < x[i])) throw DomainError(std::string(what) + ": points must be strictly increasing");
  }
}

void finite_difference_log_gradient(const PartitionFunction& z, std::span<const double> x, std::span<double> out) {
  const double gap = min_gap(x);
  // a lone point has no natural length scale
  const double h = 1e-4 * (std::isfinite(gap) ? gap : 1.0 + std::fabs(x.empty() ? 0.0 : x[0]));
  if (!(h > 0.0) || !std::isfinite(h) || h < 1e-300) throw NumericalError("gradient: step underflow");
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double up = z.log_value(y);
    y[i] = x[i] - h;
    const double down = z.log_value(y);
    y[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("gradient: log Z not finite near x_" + std::to_string(i + 1) +
                           " (too close to the domain boundary?)");
    }
    out[i] = (up - down) / (2.0 * h);
  }
}

std::vector<double> grad_log_z(const PartitionFunction& z, std::span<const double> x) {
  require_ordered(x, "grad_log_z");
  if (static_cast<int>(x.size()) != z.arity()) throw DomainError("grad_log_z: wrong number of points");
  std::vector<double> g(x.size());
  z.log_gradient(x, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) throw NumericalError("grad_log_z: non-finite component " + std::to_string(i + 1));
  }
  return g;
}

double null_vector_residual(const PartitionFunction& z, std::span<const double> x, std::size_t i) {
  require_ordered(x, "null_vector_residual");
  if (static_cast<int>(x.size()) != z.arity() || i >= x.size()) throw DomainError("null_vector_residual: bad index");
  const double kappa = z.kappa();
  const double gap = min_gap(x);
  const double h2 = 1e-3 * gap;
  if (!(h2 > 1e-300)) throw NumericalError("null_vector_residual: step underflow");

  std::vector<double> y(x.begin(), x.end());
  const double l0 = z.log_value(y);
  y[i] = x[i] + h2;
  const double lp = z.log_value(y);
  y[i] = x[i] - h2;
  const double lm = z.log_value(y);
  y[i] = x[i];
  // (Z(x+h) - 2Z(x) + Z(x-h)) / (h² Z(x)), computed from log ratios.
  const double second = (std::expm1(lp - l0) + std::expm1(lm - l0)) / (h2 * h2);
  if (!std::isfinite(second)) throw NumericalError("null_vector_residual: non-finite second difference");

  std::vector<double> grad(x.size());
  finite_difference_log_gradient(z, x, grad);
  const double h1 = h_weight(1, kappa);
  double cross = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j == i) continue;
    const double d = x[j] - x[i];
    cross += grad[j] / d - h1 / (d * d);
  }
  return 0.5 * kappa * second + 2.0 * cross;
}

// ---------------------------------------------------------------------------

std::string PartitionSelection::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Z0: return "Z0";
    case Kind::Z2: return "Z2";
    case Kind::Chordal: return "chordal";
    case Kind::Triple: return "triple";
    case Kind::Mixture: os << "mixture:" << first << ',' << second; break;
    case Kind::FourPoint: os << "fourpoint:" << first << ',' << second; break;
  }
  return os.str();
}

PartitionSelection parse_partition_selection(std::string_view text) {
  PartitionSelection sel;
  if (text == "Z0") { sel.kind = PartitionSelection::Kind::Z0; return sel; }
  if (text == "Z2") { sel.kind = PartitionSelection::Kind::Z2; return sel; }
  if (text == "chordal") { sel.kind = PartitionSelection::Kind::Chordal; return sel; }
  if (text == "triple") { sel.kind = PartitionSelection::Kind::Triple; return sel; }
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  if (colon != std::string_view::npos && (head == "mixture" || head == "fourpoint")) {
    sel.kind = head == "mixture" ? PartitionSelection::Kind::Mixture : PartitionSelection::Kind::FourPoint;
    const std::string_view args = text.substr(colon + 1);
    const auto comma = args.find(',');
    if (comma == std::string_view::npos || !parse_number(args.substr(0, comma), sel.first) ||
        !parse_number(args.substr(comma + 1), sel.second)) {
      throw DomainError("partition selection '" + std::string(text) + "': expected two numbers after ':'");
    }
    if (!(sel.first >= 0.0 && sel.second >= 0.0) || sel.first + sel.second == 0.0) {
      throw DomainError("partition selection '" + std::string(text) + "': weights must be >= 0, not both 0");
    }
    return sel;
  }
  throw DomainError("unknown partition selection '" + std::string(text) +
                    "' (expected Z0, Z2, mixture:l,m, chordal, triple, fourpoint:pI,pII)");
}

PartitionPtr make_partition_function(const PartitionSelection& selection, double kappa, int n) {
  require_kappa(kappa);
  using Kind = PartitionSelection::Kind;
  auto need = [&](bool ok, const char* msg) {
    if (!ok) throw DomainError(std::string(selection.str()) + ": " + msg + " (got n=" + std::to_string(n) + ")");
  };
  switch (selection.kind) {
    case Kind::Z0:
      need(n == 2, "needs exactly 2 points");
      return std::make_shared<PairFunction>(PairVariant::Z0, kappa);
    case Kind::Z2:
      need(n == 2, "needs exactly 2 points");
      return std::make_shared<PairFunction>(PairVariant::Z2, kappa);
    case Kind::Mixture:
      need(n == 2, "needs exactly 2 points");
      if (!(selection.first >= 0.0 && selection.second >= 0.0) || selection.first + selection.second == 0.0)
        throw DomainError("mixture: weights must be non-negative and not both zero");
      return std::make_shared<MixtureFunction>(selection.first, selection.second, kappa);
    case Kind::Chordal:
      need(n >= 1, "needs at least one point");
      return std::make_shared<ChordalFunction>(n, false, kappa);
    case Kind::Triple:
      need(n == 3, "needs exactly 3 points");
      return std::make_shared<ChordalFunction>(3, true, kappa);
    case Kind::FourPoint:
      need(n == 3 || n == 4, "needs 3 points (fourth at infinity) or 4 points");
      if (!(selection.first >= 0.0 && selection.second >= 0.0) || selection.first + selection.second == 0.0)
        throw DomainError("fourpoint: weights must be non-negative and not both zero");
      return std::make_shared<FourPointFunction>(n, kappa, selection.first, selection.second);
  }
  throw DomainError("unreachable partition selection");
}

}  // namespace multisle
