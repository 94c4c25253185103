#include "multisle/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multisle/errors.hpp"

namespace multisle {

namespace {

// Images closer to the real line than this fraction of the slit height are
// treated as swallowed; composition of many sub-slits at one point leaves
// about sqrt(machine epsilon) of residue.
constexpr double kSwallowTolerance = 1e-6;

// Square root on the upper-half-plane branch; on the real axis the sign follows `hint`.
Complex upper_sqrt(Complex v, double hint) {
  Complex r = std::sqrt(v);
  if (r.imag() < 0.0 || (r.imag() == 0.0 && (r.real() > 0.0) != (hint > 0.0) && r.real() != 0.0)) r = -r;
  return r;
}

// One forward slit map applied to z, returning the displacement g(z) - z.
Complex forward_displacement(Complex z, double driving, double capacity) {
  const Complex w = z - driving;
  const Complex r = upper_sqrt(w * w + 2.0 * capacity, w.real());
  return 2.0 * capacity / (r + w);
}

Complex inverse_map(Complex z, double driving, double capacity) {
  const Complex w = z - driving;
  const Complex r = upper_sqrt(w * w - 2.0 * capacity, w.real());
  const Complex out = driving + r;
  if (!std::isfinite(out.real()) || !std::isfinite(out.imag()) || out.imag() < 0.0) {
    throw NumericalError("trace: inverse slit map left the closed upper half plane");
  }
  return out;
}

}  // namespace

void LoewnerChain::append(int curve, double driving, double capacity) {
  steps_.push_back({curve, driving, capacity});
  total_capacity_ += capacity;
}

void LoewnerChain::clear() noexcept {
  steps_.clear();
  total_capacity_ = 0.0;
}

double transport_real(double x, double driving, double capacity) noexcept {
  const double w = x - driving;
  const double push = 2.0 * capacity / (std::sqrt(w * w + 2.0 * capacity) + std::fabs(w));
  return w >= 0.0 ? x + push : x - push;
}

MappedPoint map_point(const LoewnerChain& chain, Complex z) {
  for (const ElementaryStep& s : chain.steps()) {
    const Complex w = z - s.driving;
    const Complex r = upper_sqrt(w * w + 2.0 * s.capacity, w.real());
    z = s.driving + r;
    if (z.imag() <= kSwallowTolerance * std::sqrt(2.0 * s.capacity)) return {z, true};
  }
  return {z, false};
}

Complex map_displacement(const LoewnerChain& chain, Complex z) {
  Complex shift = 0.0;
  for (const ElementaryStep& s : chain.steps()) shift += forward_displacement(z + shift, s.driving, s.capacity);
  return shift;
}

double laurent_capacity(const LoewnerChain& chain) {
  if (chain.empty()) return 0.0;
  double reach = 0.0;
  for (const ElementaryStep& s : chain.steps()) reach = std::max(reach, std::fabs(s.driving));
  reach += std::sqrt(2.0 * chain.total_capacity()) + 1.0;
  const double y = 1e4 * reach;
  const Complex iy1(0.0, y);
  const Complex iy2(0.0, 2.0 * y);
  const double c1 = (map_displacement(chain, iy1) * iy1).real();
  const double c2 = (map_displacement(chain, iy2) * iy2).real();
  return 2.0 * c2 - c1;
}

std::vector<Complex> trace_points(const LoewnerChain& chain, int curve, std::size_t stride) {
  stride = std::max<std::size_t>(stride, 1);
  const auto steps = chain.steps();
  std::vector<std::size_t> own;
  for (std::size_t k = 0; k < steps.size(); ++k)
    if (steps[k].curve == curve) own.push_back(k);
  std::vector<Complex> out;
  if (own.empty()) return out;

  auto pull_back = [&](Complex w, std::size_t from) {
    for (std::size_t k = from; k-- > 0;) w = inverse_map(w, steps[k].driving, steps[k].capacity);
    return w;
  };

  // Root on the real line: the first driving position, before its own slit.
  Complex root = pull_back(Complex(steps[own.front()].driving, 0.0), own.front());
  out.emplace_back(root.real(), 0.0);
  for (std::size_t idx = 0; idx < own.size(); ++idx) {
    if ((idx + 1) % stride != 0 && idx + 1 != own.size()) continue;
    const std::size_t k = own[idx];
    out.push_back(pull_back(Complex(steps[k].driving, 0.0), k + 1));
  }
  return out;
}

}  // namespace multisle
