#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace shelab {

namespace detail {
// FFTW planning is not thread-safe; plan creation/destruction serializes here.
// Executing distinct plans on their own buffers is safe concurrently.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real FFT workspace for one periodic grid. Owns FFTW plans and buffers, so
/// each simulation path (or thread) keeps its own instance. Provides the two
/// spectral operations the solver needs:
///
///   implicit_diffusion: u <- (I - dt Lap)^(-1) u, mode-k multiplier 1/(1 + dt k^2)
///   heat_semigroup:     u <- exp(t Lap) u,        mode-k multiplier exp(-k^2 t)
///
/// where k = 0 .. n/2 are the integer wavenumbers of the 2 pi domain.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(int n) : n_(n) {
    if (n < 2) throw std::invalid_argument("SpectralWorkspace: need at least 2 points");
    real_ = fftw_alloc_real(static_cast<std::size_t>(n));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    if (!real_ || !spec_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw std::runtime_error("SpectralWorkspace: FFTW plan failed");
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  ~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (inv_) fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int size() const { return n_; }

  void implicit_diffusion(std::span<double> u, double dt) {
    if (!(dt >= 0.0)) throw std::invalid_argument("implicit_diffusion: dt must be >= 0");
    apply_multiplier(u, [dt](double k) { return 1.0 / (1.0 + dt * k * k); });
  }

  void heat_semigroup(std::span<double> u, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("heat_semigroup: t must be >= 0");
    apply_multiplier(u, [t](double k) { return std::exp(-k * k * t); });
  }

  /// Amplitude of the cos(k x)-like component of u (modulus, so the grid's
  /// phase convention does not matter). k = 0 returns the mean.
  double mode_amplitude(std::span<const double> u, int k) {
    check_span(u);
    for (int i = 0; i < n_; ++i) real_[i] = u[i];
    fftw_execute(fwd_);
    if (k < 0 || k > n_ / 2) throw std::invalid_argument("mode_amplitude: k out of range");
    const std::complex<double> c(spec_[k][0], spec_[k][1]);
    const double scale = (k == 0 || (n_ % 2 == 0 && k == n_ / 2)) ? 1.0 : 2.0;
    return scale * std::abs(c) / n_;
  }

 private:
  template <class Mult>
  void apply_multiplier(std::span<double> u, Mult mult) {
    check_span(u);
    for (int i = 0; i < n_; ++i) real_[i] = u[i];
    fftw_execute(fwd_);
    const int n_modes = n_ / 2 + 1;
    for (int k = 0; k < n_modes; ++k) {
      const double m = mult(static_cast<double>(k));
      spec_[k][0] *= m;
      spec_[k][1] *= m;
    }
    fftw_execute(inv_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) u[i] = real_[i] * scale;
  }

  void check_span(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != n_)
      throw std::invalid_argument("SpectralWorkspace: span size mismatch");
  }

  int n_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

}  // namespace shelab
