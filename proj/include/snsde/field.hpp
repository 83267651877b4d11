#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/grid.hpp"

namespace snsde {

/// Number of components of a field: scalar, 2-vector, or 2x2 matrix
/// (stored row-major: 00, 01, 10, 11).
enum class Rank : int { scalar = 1, vector = 2, matrix = 4 };

inline int component_count(Rank r) noexcept { return static_cast<int>(r); }

inline std::string to_string(Rank r) {
  switch (r) {
    case Rank::scalar: return "scalar";
    case Rank::vector: return "vector";
    case Rank::matrix: return "matrix";
  }
  return "?";
}

/// Real-valued samples of a field on the physical grid, component-major.
struct PhysicalField {
  Grid2D grid;
  Rank rank = Rank::scalar;
  std::vector<double> values;

  PhysicalField() = default;
  PhysicalField(Grid2D g, Rank r)
      : grid(g), rank(r), values(g.physical_size() * static_cast<std::size_t>(component_count(r)), 0.0) {}

  int components() const noexcept { return component_count(rank); }

  std::span<double> component(int c) {
    return {values.data() + static_cast<std::size_t>(c) * grid.physical_size(), grid.physical_size()};
  }
  std::span<const double> component(int c) const {
    return {values.data() + static_cast<std::size_t>(c) * grid.physical_size(), grid.physical_size()};
  }

  double& at(int c, std::size_t i1, std::size_t i2) {
    return values[static_cast<std::size_t>(c) * grid.physical_size() + i1 * grid.n() + i2];
  }
  double at(int c, std::size_t i1, std::size_t i2) const {
    return values[static_cast<std::size_t>(c) * grid.physical_size() + i1 * grid.n() + i2];
  }

  /// Fill every component from f(component, x1, x2).
  template <class F>
  static PhysicalField sample(Grid2D g, Rank r, F&& f) {
    PhysicalField out(g, r);
    for (int c = 0; c < out.components(); ++c) {
      for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
        for (std::size_t i2 = 0; i2 < g.n(); ++i2) {
          out.at(c, i1, i2) = f(c, g.x(i1), g.x(i2));
        }
      }
    }
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Fourier coefficients of a real scalar, vector or matrix field on the unit torus.
///
/// A coefficient c(k) multiplies exp(2 pi i k.x); the constant field 1 has
/// c(0) = 1. Only the half spectrum is stored, so Hermitian symmetry holds by
/// construction except on the k2 = 0 and k2 = n/2 columns, where
/// hermitian_defect() measures it.
class SpectralField {
public:
  SpectralField() = default;
  SpectralField(Grid2D grid, Rank rank)
      : grid_(grid),
        rank_(rank),
        coeffs_(grid.spectral_size() * static_cast<std::size_t>(component_count(rank)), Complex{}) {}

  static SpectralField zeros_like(const SpectralField& f) { return {f.grid_, f.rank_}; }

  const Grid2D& grid() const noexcept { return grid_; }
  Rank rank() const noexcept { return rank_; }
  int components() const noexcept { return component_count(rank_); }
  bool empty() const noexcept { return coeffs_.empty(); }

  std::span<Complex> component(int c) {
    return {coeffs_.data() + static_cast<std::size_t>(c) * grid_.spectral_size(), grid_.spectral_size()};
  }
  std::span<const Complex> component(int c) const {
    return {coeffs_.data() + static_cast<std::size_t>(c) * grid_.spectral_size(), grid_.spectral_size()};
  }

  Complex& at(int c, std::size_t i1, std::size_t j2) {
    return coeffs_[static_cast<std::size_t>(c) * grid_.spectral_size() + grid_.spectral_index(i1, j2)];
  }
  const Complex& at(int c, std::size_t i1, std::size_t j2) const {
    return coeffs_[static_cast<std::size_t>(c) * grid_.spectral_size() + grid_.spectral_index(i1, j2)];
  }

  std::span<Complex> data() noexcept { return coeffs_; }
  std::span<const Complex> data() const noexcept { return coeffs_; }

  /// Extract component c as a scalar field.
  SpectralField scalar_component(int c) const {
    SpectralField out(grid_, Rank::scalar);
    std::ranges::copy(component(c), out.component(0).begin());
    return out;
  }
  void set_component(int c, const SpectralField& s) {
    require_rank(s, Rank::scalar, "set_component");
    if (!(s.grid_ == grid_)) throw ShapeError("set_component: grid mismatch");
    std::ranges::copy(s.component(0), component(c).begin());
  }

  SpectralField& operator+=(const SpectralField& o) {
    check_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  /// this += s * o
  SpectralField& axpy(double s, const SpectralField& o) {
    check_same_shape(o, "axpy");
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

  /// Largest |c(-k) - conj(c(k))| over the self-conjugate columns.
  double hermitian_defect() const {
    double worst = 0.0;
    const std::size_t n = grid_.n();
    for (int c = 0; c < components(); ++c) {
      for (std::size_t j2 : {std::size_t{0}, n / 2}) {
        for (std::size_t i1 = 0; i1 < n; ++i1) {
          const std::size_t mirror = (n - i1) % n;
          worst = std::max(worst, std::abs(at(c, mirror, j2) - std::conj(at(c, i1, j2))));
        }
      }
    }
    return worst;
  }

  Complex mean(int c = 0) const { return at(c, 0, 0); }

  bool same_shape(const SpectralField& o) const noexcept { return grid_ == o.grid_ && rank_ == o.rank_; }

  void check_same_shape(const SpectralField& o, const char* where) const {
    if (!(grid_ == o.grid_)) throw ShapeError(std::string(where) + ": grid mismatch");
    if (rank_ != o.rank_) throw ShapeError(std::string(where) + ": rank mismatch");
  }

  static void require_rank(const SpectralField& f, Rank r, const char* where) {
    if (f.rank() != r) {
      throw ShapeError(std::string(where) + ": expected " + to_string(r) + " field, got " + to_string(f.rank()));
    }
  }

private:
  Grid2D grid_;
  Rank rank_ = Rank::scalar;
  std::vector<Complex> coeffs_;
};

/// Forward transform of physical samples to normalized Fourier coefficients.
inline SpectralField transform_forward(const PhysicalField& values) {
  const Grid2D& g = values.grid;
  if (values.values.size() != g.physical_size() * static_cast<std::size_t>(values.components())) {
    throw ShapeError("transform_forward: array size does not match grid");
  }
  const auto& plans = detail::plans_for(g);
  SpectralField out(g, values.rank);
  std::vector<double> scratch(g.physical_size());
  const double scale = 1.0 / static_cast<double>(g.physical_size());
  for (int c = 0; c < values.components(); ++c) {
    std::ranges::copy(values.component(c), scratch.begin());
    auto dst = out.component(c);
    plans.forward(scratch.data(), dst.data());
    for (auto& z : dst) z *= scale;
  }
  return out;
}

inline PhysicalField transform_backward(const SpectralField& f) {
  const Grid2D& g = f.grid();
  const auto& plans = detail::plans_for(g);
  PhysicalField out(g, f.rank());
  std::vector<Complex> scratch(g.spectral_size());
  for (int c = 0; c < f.components(); ++c) {
    std::ranges::copy(f.component(c), scratch.begin());
    plans.backward(scratch.data(), out.component(c).data());
  }
  return out;
}

/// Convenience: sample a closed-form field and transform it.
template <class F>
SpectralField spectral_from(Grid2D g, Rank r, F&& f) {
  return transform_forward(PhysicalField::sample(g, r, std::forward<F>(f)));
}

}  // namespace snsde
