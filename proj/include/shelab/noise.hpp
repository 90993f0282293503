#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "shelab/heat_kernel.hpp"

namespace shelab {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// splitmix64 finalizer; the mixing primitive for all noise derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Uniform in (0, 1), never exactly 0 or 1.
inline double to_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Discretized space-time white noise on a periodic grid of n_cells cells of
/// width dx. One call to increments(dt) yields one step's worth of cell
/// increments dW_i ~ N(0, dt * dx), i.i.d. across cells and steps.
///
/// Generation is counter-based: the Gaussians for step c are a pure function
/// of (seed, c, cell), with no sequential generator state. Output is
/// therefore reproducible under parallel ensemble execution and under replay
/// from any step. The derivation chain is fixed:
///
///   stream seed for path i : mix64(master_seed + kGolden * (i + 1))
///   state for step c       : mix64(seed + kGolden * (c + 1))
///   uniforms for cell pair : to_unit(mix64(state + lane + 1)), lanes 0,1,2,...
///
/// with mix64 the splitmix64 finalizer, and Box-Muller turning uniform pairs
/// into Gaussian pairs (cells 2m and 2m+1 share one pair).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, int n_cells, double dx)
      : seed_(seed), n_cells_(n_cells), dx_(dx) {
    if (n_cells < 1 || !(dx > 0.0)) throw std::invalid_argument("NoiseStream: bad grid");
  }

  static NoiseStream derive(std::uint64_t master_seed, std::uint64_t trajectory_index,
                            int n_cells, double dx) {
    return NoiseStream(detail::mix64(master_seed + detail::kGolden * (trajectory_index + 1)),
                       n_cells, dx);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  int n_cells() const { return n_cells_; }
  double dx() const { return dx_; }

  void seek(std::uint64_t counter) { counter_ = counter; }

  /// Fills out[0..n_cells) with this step's increments and advances the
  /// counter. Variance of each increment is dt * dx.
  void increments(double dt, std::span<double> out) {
    if (!(dt > 0.0)) throw std::invalid_argument("NoiseStream::increments: dt must be > 0");
    if (static_cast<int>(out.size()) != n_cells_)
      throw std::invalid_argument("NoiseStream::increments: span size mismatch");
    const double scale = std::sqrt(dt * dx_);
    const std::uint64_t state = detail::mix64(seed_ + detail::kGolden * (counter_ + 1));
    int i = 0;
    std::uint64_t lane = 0;
    while (i < n_cells_) {
      const double u1 = detail::to_unit(detail::mix64(state + ++lane));
      const double u2 = detail::to_unit(detail::mix64(state + ++lane));
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double a = kTwoPi * u2;
      out[i++] = scale * r * std::cos(a);
      if (i < n_cells_) out[i++] = scale * r * std::sin(a);
    }
    ++counter_;
  }

 private:
  std::uint64_t seed_;
  int n_cells_;
  double dx_;
  std::uint64_t counter_ = 0;
};

}  // namespace shelab
