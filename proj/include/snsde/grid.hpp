#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "snsde/error.hpp"

namespace snsde {

using Complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Uniform n x n grid on the unit torus [0,1)^2.
///
/// Physical values are stored row-major with x1 = i1/n as the slow index and
/// x2 = i2/n as the fast one. Spectral coefficients use the real-to-complex
/// half layout n x (n/2+1): row i1 carries k1 = i1 (i1 <= n/2) or i1 - n,
/// column j2 carries k2 = j2 >= 0. Negative k2 follow from Hermitian symmetry.
class Grid2D {
public:
  Grid2D() = default;

  explicit Grid2D(std::size_t modes_per_dim) : n_(modes_per_dim) {
    if (n_ < 4 || n_ % 2 != 0) {
      throw DomainError("grid size must be even and >= 4, got " + std::to_string(n_));
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t half() const noexcept { return n_ / 2 + 1; }
  std::size_t physical_size() const noexcept { return n_ * n_; }
  std::size_t spectral_size() const noexcept { return n_ * half(); }

  std::size_t spectral_index(std::size_t i1, std::size_t j2) const noexcept {
    return i1 * half() + j2;
  }

  /// Signed integer wavenumber for row i1 (Nyquist row reported as +n/2).
  long k1(std::size_t i1) const noexcept {
    const auto i = static_cast<long>(i1);
    const auto n = static_cast<long>(n_);
    return i <= n / 2 ? i : i - n;
  }
  long k2(std::size_t j2) const noexcept { return static_cast<long>(j2); }

  bool is_nyquist(std::size_t i1, std::size_t j2) const noexcept {
    return i1 == n_ / 2 || j2 == n_ / 2;
  }

  /// Hermitian weight of a half-layout column in full-lattice sums.
  double column_weight(std::size_t j2) const noexcept {
    return (j2 == 0 || j2 == n_ / 2) ? 1.0 : 2.0;
  }

  /// Largest |k| kept by the 2/3 truncation: keep |k_i| < n/3.
  long dealias_cutoff() const noexcept {
    const auto n = static_cast<long>(n_);
    return (n % 3 == 0) ? n / 3 - 1 : n / 3;
  }

  bool keeps_dealiased(std::size_t i1, std::size_t j2) const noexcept {
    const long c = dealias_cutoff();
    return std::labs(k1(i1)) <= c && k2(j2) <= c;
  }

  double x(std::size_t i) const noexcept { return static_cast<double>(i) / static_cast<double>(n_); }

  friend bool operator==(const Grid2D& a, const Grid2D& b) noexcept { return a.n_ == b.n_; }

private:
  std::size_t n_ = 0;
};

namespace detail {

// FFTW plans for one grid size. Plans are immutable after creation and are
// executed through the new-array interface, which is thread-safe.
class FftPlans {
public:
  explicit FftPlans(std::size_t n) : n_(n) {
    const int ni = static_cast<int>(n);
    auto* real = fftw_alloc_real(n * n);
    auto* spec = fftw_alloc_complex(n * (n / 2 + 1));
    forward_ = fftw_plan_dft_r2c_2d(ni, ni, real, spec, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward_ = fftw_plan_dft_c2r_2d(ni, ni, spec, real, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(real);
    fftw_free(spec);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(double* in, Complex* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  // Destroys the contents of `in`.
  void backward(Complex* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

private:
  std::size_t n_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

inline const FftPlans& plans_for(const Grid2D& grid) {
  auto& mutex = FftPlans::planner_mutex();
  static std::map<std::size_t, std::unique_ptr<FftPlans>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[grid.n()];
  if (!slot) slot = std::make_unique<FftPlans>(grid.n());
  return *slot;
}

}  // namespace detail
}  // namespace snsde
