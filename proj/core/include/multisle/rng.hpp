#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace multisle {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Per-sample stream seed from (master seed, sample index); independent of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Source of the standard Gaussian increments that drive the martingales.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual void fill(std::span<double> out) = 0;
};

class GaussianNoise final : public NoiseSource {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(seed) {}
  void fill(std::span<double> out) override;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// All increments zero: the deterministic (κ-noise-free) evolution.
class ZeroNoise final : public NoiseSource {
 public:
  void fill(std::span<double> out) override;
};

}  // namespace multisle
