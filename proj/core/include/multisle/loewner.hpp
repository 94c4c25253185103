#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace multisle {

using Complex = std::complex<double>;

/// One vertical-slit map g(z) = ξ + sqrt((z-ξ)² + 2δ), adding half-plane capacity δ at ξ.
struct ElementaryStep {
  int curve = 0;          // 0-based curve index
  double driving = 0.0;   // ξ
  double capacity = 0.0;  // δ > 0
};

/// Time-ordered log of elementary maps whose composition is f_t.
class LoewnerChain {
 public:
  void append(int curve, double driving, double capacity);
  void reserve(std::size_t n) { steps_.reserve(n); }
  void clear() noexcept;

  std::span<const ElementaryStep> steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }
  /// Sum of capacity increments, i.e. 2t.
  double total_capacity() const noexcept { return total_capacity_; }

 private:
  std::vector<ElementaryStep> steps_;
  double total_capacity_ = 0.0;
};

/// Exact forward image of a real boundary point under one slit map.
double transport_real(double x, double driving, double capacity) noexcept;

struct MappedPoint {
  Complex value;
  bool swallowed = false;
};

/// f_t(z) for Im z > 0. Stops and reports `swallowed` once an image reaches
/// the real line (the point lies on or under a slit).
MappedPoint map_point(const LoewnerChain& chain, Complex z);

/// f_t(z) - z accumulated without cancellation; meaningful for z far from the hulls.
Complex map_displacement(const LoewnerChain& chain, Complex z);

/// Estimate of the Laurent coefficient lim (f_t(iY) - iY) iY, which equals 2t.
/// Uses Richardson extrapolation over two probe heights well outside the hulls.
double laurent_capacity(const LoewnerChain& chain);

/// Tip positions of one curve, reconstructed by pulling each of its slit tips
/// back through the inverse maps. The first point is the curve's boundary
/// root. `stride` keeps every stride-th elementary step of that curve (the
/// last one is always kept). Throws NumericalError on a branch failure.
std::vector<Complex> trace_points(const LoewnerChain& chain, int curve, std::size_t stride);

}  // namespace multisle
