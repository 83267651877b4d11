#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "snsde/error.hpp"
#include "snsde/field.hpp"

// Spectral differential operators on the unit torus. Every operator that
// differentiates (and the Leray projection built from them) discards the
// Nyquist row and column.

namespace snsde {

namespace detail {

inline void require_same_grid(const SpectralField& a, const SpectralField& b, const char* where) {
  if (!(a.grid() == b.grid())) throw ShapeError(std::string(where) + ": grid mismatch");
}

// Apply m(i1, j2, k1, k2) -> Complex multiplier to every component.
template <class Mult>
SpectralField map_modes(const SpectralField& f, Mult&& m) {
  SpectralField out = SpectralField::zeros_like(f);
  const Grid2D& g = f.grid();
  for (int c = 0; c < f.components(); ++c) {
    for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
      for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
        out.at(c, i1, j2) = m(i1, j2, two_pi * g.k1(i1), two_pi * g.k2(j2)) * f.at(c, i1, j2);
      }
    }
  }
  return out;
}

inline double sum_weighted(const SpectralField& a, const SpectralField& b, bool gradient_weight) {
  const Grid2D& g = a.grid();
  double acc = 0.0;
  for (int c = 0; c < a.components(); ++c) {
    for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
      for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
        double w = g.column_weight(j2);
        if (gradient_weight) {
          if (g.is_nyquist(i1, j2)) continue;
          const double kx = two_pi * g.k1(i1);
          const double ky = two_pi * g.k2(j2);
          w *= kx * kx + ky * ky;
        }
        const Complex x = a.at(c, i1, j2);
        const Complex y = b.at(c, i1, j2);
        acc += w * (x.real() * y.real() + x.imag() * y.imag());
      }
    }
  }
  return acc;
}

}  // namespace detail

/// L2(T^2) inner product of two fields of equal shape (sum over components).
inline double inner_product(const SpectralField& a, const SpectralField& b) {
  a.check_same_shape(b, "inner_product");
  return detail::sum_weighted(a, b, false);
}

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// Parseval L2 norm and gradient seminorm.
inline Norms norms(const SpectralField& f) {
  return {std::sqrt(std::max(0.0, detail::sum_weighted(f, f, false))),
          std::sqrt(std::max(0.0, detail::sum_weighted(f, f, true)))};
}

inline double l2_norm(const SpectralField& f) { return norms(f).l2; }

/// 2/3-rule truncation: zero every mode with |k_i| >= n/3.
inline SpectralField dealias(const SpectralField& f) {
  const Grid2D& g = f.grid();
  return detail::map_modes(f, [&](std::size_t i1, std::size_t j2, double, double) {
    return g.keeps_dealiased(i1, j2) ? Complex{1.0} : Complex{0.0};
  });
}

/// Zero the Nyquist row and column.
inline SpectralField strip_nyquist(const SpectralField& f) {
  const Grid2D& g = f.grid();
  return detail::map_modes(f, [&](std::size_t i1, std::size_t j2, double, double) {
    return g.is_nyquist(i1, j2) ? Complex{0.0} : Complex{1.0};
  });
}

/// Partial derivative along axis 0 (x1) or 1 (x2), applied componentwise.
inline SpectralField partial(const SpectralField& f, int axis) {
  const Grid2D& g = f.grid();
  return detail::map_modes(f, [&](std::size_t i1, std::size_t j2, double kx, double ky) {
    if (g.is_nyquist(i1, j2)) return Complex{0.0};
    return Complex{0.0, axis == 0 ? kx : ky};
  });
}

inline SpectralField gradient(const SpectralField& f) {
  SpectralField::require_rank(f, Rank::scalar, "gradient");
  SpectralField out(f.grid(), Rank::vector);
  out.set_component(0, partial(f, 0));
  out.set_component(1, partial(f, 1));
  return out;
}

inline SpectralField divergence(const SpectralField& v) {
  SpectralField::require_rank(v, Rank::vector, "divergence");
  return partial(v.scalar_component(0), 0) + partial(v.scalar_component(1), 1);
}

inline SpectralField laplacian(const SpectralField& f) {
  if (f.rank() == Rank::matrix) throw ShapeError("laplacian: scalar or vector field expected");
  const Grid2D& g = f.grid();
  return detail::map_modes(f, [&](std::size_t i1, std::size_t j2, double kx, double ky) {
    if (g.is_nyquist(i1, j2)) return Complex{0.0};
    return Complex{-(kx * kx + ky * ky)};
  });
}

/// Inverse of the Laplacian on mean-zero fields; the mean of the result is 0.
inline SpectralField inv_laplacian_meanzero(const SpectralField& f) {
  if (f.rank() == Rank::matrix) throw ShapeError("inv_laplacian_meanzero: scalar or vector field expected");
  const double scale = l2_norm(f);
  for (int c = 0; c < f.components(); ++c) {
    if (std::abs(f.mean(c)) > 1e-10 * scale) {
      throw DomainError("inv_laplacian_meanzero: input has nonzero mean");
    }
  }
  const Grid2D& g = f.grid();
  return detail::map_modes(f, [&](std::size_t i1, std::size_t j2, double kx, double ky) {
    if (g.is_nyquist(i1, j2) || (i1 == 0 && j2 == 0)) return Complex{0.0};
    return Complex{-1.0 / (kx * kx + ky * ky)};
  });
}

/// Helmholtz-Leray projection: (I - k k^T/|k|^2) per mode, identity on the mean.
inline SpectralField leray_project(const SpectralField& v) {
  SpectralField::require_rank(v, Rank::vector, "leray_project");
  const Grid2D& g = v.grid();
  SpectralField out = SpectralField::zeros_like(v);
  for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
    for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
      if (g.is_nyquist(i1, j2)) continue;
      const Complex a = v.at(0, i1, j2);
      const Complex b = v.at(1, i1, j2);
      if (i1 == 0 && j2 == 0) {
        out.at(0, i1, j2) = a;
        out.at(1, i1, j2) = b;
        continue;
      }
      const double kx = two_pi * g.k1(i1);
      const double ky = two_pi * g.k2(j2);
      const Complex kv = (kx * a + ky * b) / (kx * kx + ky * ky);
      out.at(0, i1, j2) = a - kx * kv;
      out.at(1, i1, j2) = b - ky * kv;
    }
  }
  return out;
}

/// Mean-zero scalar Q with v = leray_project(v) + gradient(Q), i.e. Q = Delta^{-1} div v.
inline SpectralField scalar_potential(const SpectralField& v) {
  SpectralField::require_rank(v, Rank::vector, "scalar_potential");
  return inv_laplacian_meanzero(divergence(v));
}

/// max_k |k . v(k)| (with k scaled by 2 pi), a discrete divergence measure.
inline double max_divergence(const SpectralField& v) {
  SpectralField::require_rank(v, Rank::vector, "max_divergence");
  const Grid2D& g = v.grid();
  double worst = 0.0;
  for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
    for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
      if (g.is_nyquist(i1, j2)) continue;
      const double kx = two_pi * g.k1(i1);
      const double ky = two_pi * g.k2(j2);
      worst = std::max(worst, std::abs(kx * v.at(0, i1, j2) + ky * v.at(1, i1, j2)));
    }
  }
  return worst;
}

/// (div T)_i = sum_j d_j T_ij.
inline SpectralField tensor_divergence(const SpectralField& t) {
  SpectralField::require_rank(t, Rank::matrix, "tensor_divergence");
  SpectralField out(t.grid(), Rank::vector);
  for (int i = 0; i < 2; ++i) {
    out.set_component(i, partial(t.scalar_component(2 * i), 0) + partial(t.scalar_component(2 * i + 1), 1));
  }
  return out;
}

/// Pointwise outer product (a (x) b)_ij = a_i b_j of two vector fields.
inline SpectralField outer(const SpectralField& a, const SpectralField& b, bool dealias_products) {
  SpectralField::require_rank(a, Rank::vector, "outer");
  SpectralField::require_rank(b, Rank::vector, "outer");
  detail::require_same_grid(a, b, "outer");
  const PhysicalField pa = transform_backward(dealias_products ? dealias(a) : a);
  const PhysicalField pb = transform_backward(dealias_products ? dealias(b) : b);
  PhysicalField prod(a.grid(), Rank::matrix);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      auto dst = prod.component(2 * i + j);
      auto ai = pa.component(i);
      auto bj = pb.component(j);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = ai[p] * bj[p];
    }
  }
  SpectralField out = transform_forward(prod);
  return dealias_products ? dealias(out) : out;
}

/// Reusable advecting field: caches the physical samples of `a` so repeated
/// applications (fixed-point sweeps) cost one gradient and one product each.
class Advector {
public:
  Advector(const SpectralField& a, bool dealias_products)
      : dealias_(dealias_products), physical_(transform_backward(dealias_products ? dealias(a) : a)) {
    SpectralField::require_rank(a, Rank::vector, "Advector");
    grid_ = a.grid();
    zero_ = physical_.max_abs() == 0.0;
  }

  bool is_zero() const noexcept { return zero_; }
  bool dealiased() const noexcept { return dealias_; }
  const Grid2D& grid() const noexcept { return grid_; }

  /// (a . grad) b
  SpectralField convect(const SpectralField& b) const {
    check(b, "convect");
    if (zero_) return SpectralField::zeros_like(b);
    const SpectralField bb = dealias_ ? dealias(b) : b;
    const PhysicalField d0 = transform_backward(partial(bb, 0));
    const PhysicalField d1 = transform_backward(partial(bb, 1));
    PhysicalField prod(grid_, Rank::vector);
    auto a0 = physical_.component(0);
    auto a1 = physical_.component(1);
    for (int i = 0; i < 2; ++i) {
      auto dst = prod.component(i);
      auto g0 = d0.component(i);
      auto g1 = d1.component(i);
      for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = a0[p] * g0[p] + a1[p] * g1[p];
    }
    SpectralField out = transform_forward(prod);
    return dealias_ ? dealias(out) : out;
  }

  /// 1/2 [ (a . grad) b + div(b (x) a) ]; tested against b this vanishes
  /// identically, whatever the divergence of a.
  SpectralField convect_skew(const SpectralField& b) const {
    check(b, "convect_skew");
    if (zero_) return SpectralField::zeros_like(b);
    const SpectralField bb = dealias_ ? dealias(b) : b;
    const PhysicalField pb = transform_backward(bb);
    PhysicalField prod(grid_, Rank::matrix);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        auto dst = prod.component(2 * i + j);
        auto bi = pb.component(i);
        auto aj = physical_.component(j);
        for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = bi[p] * aj[p];
      }
    }
    SpectralField flux = transform_forward(prod);
    if (dealias_) flux = dealias(flux);
    SpectralField out = convect(b);
    out += tensor_divergence(flux);
    out *= 0.5;
    return out;
  }

private:
  void check(const SpectralField& b, const char* where) const {
    SpectralField::require_rank(b, Rank::vector, where);
    if (!(b.grid() == grid_)) throw ShapeError(std::string(where) + ": grid mismatch");
  }

  Grid2D grid_;
  bool dealias_;
  PhysicalField physical_;
  bool zero_ = false;
};

/// (a . grad) b, with optional 2/3-rule truncation of inputs and product.
inline SpectralField convect(const SpectralField& a, const SpectralField& b, bool dealias_products) {
  detail::require_same_grid(a, b, "convect");
  return Advector(a, dealias_products).convect(b);
}

/// Skew-symmetric convection 1/2[(a.grad)b + div(b (x) a)].
inline SpectralField convect_skew(const SpectralField& a, const SpectralField& b, bool dealias_products) {
  detail::require_same_grid(a, b, "convect_skew");
  return Advector(a, dealias_products).convect_skew(b);
}

}  // namespace snsde
