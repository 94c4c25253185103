#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace multisle {

/// Conformal weight h_m(κ), defined by 2κ h_m = m(2(m+2) - κ).
double h_weight(int m, double kappa);

/// Central charge c = (6-κ)(3κ-8)/(2κ).
double central_charge(double kappa);

enum class PairVariant { Z0, Z2 };

/// Two-point functions on the ordered gap: Z0 = gap^((κ-6)/κ), Z2 = gap^(2/κ).
double z_pair(double x1, double x2, PairVariant variant, double kappa);

/// λ Z0 + μ Z2. Not homogeneous unless one coefficient vanishes.
double z_mixture(double x1, double x2, double lambda, double mu, double kappa);

/// Π_{i<j} (x_j - x_i)^(2/κ).
double z_chordal_factorizable(std::span<const double> x, double kappa);

/// Pure four-point blocks at cross-ratio u, for one κ in (0,8).
///
/// Z_II(u) = C u^(2/κ) (1-u)^(2/κ) 2F1(4/κ, (12-κ)/κ; 8/κ; u) and
/// Z_I(u) = Z_II(1-u). C = Γ(a)Γ(b)/(Γ(c)Γ(a+b-c)) is the 2F1 connection
/// coefficient, which makes Z_I(u) u^((6-κ)/κ) -> 1 as u -> 0.
class FourPointBlock {
 public:
  explicit FourPointBlock(double kappa);

  double kappa() const noexcept { return kappa_; }
  double log_normalization() const noexcept { return log_norm_; }

  double log_pure_I(double u) const;
  double log_pure_II(double u) const;

  struct LogEval {
    double log_value;
    double dlog_du;
  };
  /// log(p_I Z_I + p_II Z_II) and its u-derivative.
  LogEval mixture(double u, double p_I, double p_II) const;

 private:
  double kappa_;
  double a_, b_, c_, p_;
  double log_norm_;
};

double z_pure_II(double x, double kappa);
double z_pure_I(double x, double kappa);

/// Cross-ratio (X2-X1)(X4-X3) / ((X3-X1)(X4-X2)); X4 may be +infinity.
double harmonic_ratio(double x1, double x2, double x3, double x4);

/// [(X4-X2)(X3-X1)]^((κ-6)/κ) (p_I Z_I + p_II Z_II)(u); for X4 = +infinity
/// the X4 factor is dropped (the three-point limit).
double z_four_point(const std::array<double, 4>& points, double kappa, double p_I, double p_II);

/// Evaluator bundle for one choice of Z on n ordered points.
///
/// Implementations are immutable after construction and safe to share
/// across threads.
class PartitionFunction {
 public:
  virtual ~PartitionFunction() = default;

  virtual std::string label() const = 0;
  /// Number of finite boundary points n.
  virtual int arity() const = 0;
  /// Arch count m of the sector (maximum number of pairings expected).
  virtual int sector() const = 0;
  double kappa() const noexcept { return kappa_; }

  /// log Z; no ordering validation (hot path).
  virtual double log_value(std::span<const double> x) const = 0;
  /// ∂_i log Z into `out`; the default is a central finite difference.
  virtual void log_gradient(std::span<const double> x, std::span<double> out) const;
  virtual bool analytic_gradient() const { return false; }

  /// Homogeneity degree h_{n-2m} - n h_1, or nullopt when Z is not scale invariant.
  virtual std::optional<double> scaling_weight() const;

  double value(std::span<const double> x) const;

 protected:
  explicit PartitionFunction(double kappa) : kappa_(kappa) {}

 private:
  double kappa_;
};

using PartitionPtr = std::shared_ptr<const PartitionFunction>;

/// Parsed form of "Z0", "Z2", "mixture:λ,μ", "chordal", "triple", "fourpoint:pI,pII".
struct PartitionSelection {
  enum class Kind { Z0, Z2, Mixture, Chordal, Triple, FourPoint };
  Kind kind = Kind::FourPoint;
  double first = 1.0;
  double second = 1.0;

  std::string str() const;
  friend bool operator==(const PartitionSelection&, const PartitionSelection&) = default;
};

PartitionSelection parse_partition_selection(std::string_view text);

/// Build Z for n points. "fourpoint" accepts n = 3 (fourth point at infinity) or n = 4.
PartitionPtr make_partition_function(const PartitionSelection& selection, double kappa, int n);

/// Throws DomainError unless x is finite and strictly increasing.
void require_ordered(std::span<const double> x, const char* what);

/// Central differences of log Z with step 1e-4 * (minimum gap).
void finite_difference_log_gradient(const PartitionFunction& z, std::span<const double> x, std::span<double> out);

/// Validated gradient of log Z (analytic when available).
std::vector<double> grad_log_z(const PartitionFunction& z, std::span<const double> x);

/// (D_i Z)/Z with D_i = (κ/2)∂_i² + 2Σ_{j≠i}[∂_j/(x_j-x_i) - h_1/(x_j-x_i)²], by finite
/// differences (step 1e-3 * min gap for ∂_i², 1e-4 * min gap for first derivatives).
/// `i` is 0-based.
double null_vector_residual(const PartitionFunction& z, std::span<const double> x, std::size_t i);

}  // namespace multisle
