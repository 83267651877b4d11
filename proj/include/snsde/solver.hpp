#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/operators.hpp"

namespace snsde {

/// The linear operator of one implicit step,
///   L y = (1/tau - diffusion * Delta) y + weight * P N_a(y),
/// where N_a is the (standard or skew) convection by a fixed advecting field.
struct ImplicitOperator {
  double inv_tau = 1.0;
  double diffusion = 0.0;
  double convect_weight = 0.0;
  const Advector* advector = nullptr;  // null: no convective part
  bool skew = false;

  bool is_diagonal() const noexcept {
    return advector == nullptr || advector->is_zero() || convect_weight == 0.0;
  }

  SpectralField convective_part(const SpectralField& y) const {
    if (is_diagonal()) return SpectralField::zeros_like(y);
    SpectralField n = skew ? advector->convect_skew(y) : advector->convect(y);
    n *= convect_weight;
    return leray_project(n);
  }

  /// Invert the diagonal part (1/tau - diffusion * Delta).
  SpectralField diagonal_solve(const SpectralField& r) const {
    const Grid2D& g = r.grid();
    return detail::map_modes(r, [&](std::size_t i1, std::size_t j2, double kx, double ky) {
      const double lap = g.is_nyquist(i1, j2) ? 0.0 : kx * kx + ky * ky;
      return Complex{1.0 / (inv_tau + diffusion * lap)};
    });
  }

  SpectralField apply(const SpectralField& y) const {
    SpectralField out = y * inv_tau;
    out.axpy(-diffusion, laplacian(y));
    if (!is_diagonal()) out += convective_part(y);
    return out;
  }
};

struct SolveReport {
  std::size_t iterations = 0;
  double defect = 0.0;  // ||L y - rhs|| / ||rhs||
  bool used_krylov = false;
};

namespace detail {

// Restarted GMRES with right diagonal preconditioning, on fields viewed as a
// real vector space with the L2 inner product.
inline SpectralField gmres(const ImplicitOperator& op, const SpectralField& rhs, SpectralField x, double tol,
                           std::size_t max_iters, std::size_t restart, std::size_t& iterations, double& rel_residual) {
  const double rhs_norm = l2_norm(rhs);
  iterations = 0;
  if (rhs_norm == 0.0) {
    rel_residual = 0.0;
    return SpectralField::zeros_like(rhs);
  }
  while (true) {
    SpectralField r = rhs - op.apply(x);
    double beta = l2_norm(r);
    rel_residual = beta / rhs_norm;
    if (rel_residual <= tol || iterations >= max_iters) return x;

    std::vector<SpectralField> V;
    V.push_back(r * (1.0 / beta));
    std::vector<std::vector<double>> H(restart + 1, std::vector<double>(restart, 0.0));
    std::vector<double> cs(restart, 0.0), sn(restart, 0.0), g(restart + 1, 0.0);
    g[0] = beta;
    std::size_t used = 0;
    for (std::size_t j = 0; j < restart && iterations < max_iters; ++j, ++iterations) {
      SpectralField w = op.apply(op.diagonal_solve(V[j]));
      for (std::size_t i = 0; i <= j; ++i) {
        H[i][j] = inner_product(w, V[i]);
        w.axpy(-H[i][j], V[i]);
      }
      const double hnext = l2_norm(w);
      H[j + 1][j] = hnext;
      for (std::size_t i = 0; i < j; ++i) {
        const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t;
      }
      const double denom = std::hypot(H[j][j], H[j + 1][j]);
      cs[j] = denom == 0.0 ? 1.0 : H[j][j] / denom;
      sn[j] = denom == 0.0 ? 0.0 : H[j + 1][j] / denom;
      H[j][j] = denom;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      used = j + 1;
      if (std::abs(g[j + 1]) / rhs_norm <= tol || hnext == 0.0) {
        ++iterations;
        break;
      }
      w *= 1.0 / hnext;
      V.push_back(std::move(w));
    }
    // back substitution
    std::vector<double> z(used, 0.0);
    for (std::size_t i = used; i-- > 0;) {
      double s = g[i];
      for (std::size_t k = i + 1; k < used; ++k) s -= H[i][k] * z[k];
      z[i] = H[i][i] == 0.0 ? 0.0 : s / H[i][i];
    }
    SpectralField update = SpectralField::zeros_like(rhs);
    for (std::size_t i = 0; i < used; ++i) update.axpy(z[i], V[i]);
    x += op.diagonal_solve(update);
  }
}

}  // namespace detail

/// Solve L y = rhs. The convective part is lagged in a fixed-point sweep with
/// the diffusion inverted diagonally; when the sweep stops contracting the
/// solve falls back to preconditioned GMRES on the same operator.
/// Convergence: relative update < tol (fixed point) or relative residual < tol (GMRES).
inline SpectralField solve_implicit(const ImplicitOperator& op, const SpectralField& rhs, const SpectralField& guess,
                                    double tol, std::size_t max_iters, SolveReport& report) {
  report = {};
  if (op.is_diagonal()) {
    SpectralField y = op.diagonal_solve(rhs);
    report.iterations = 1;
    report.defect = 0.0;
    return y;
  }
  SpectralField y = guess;
  double previous_update = INFINITY;
  std::size_t growth = 0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    SpectralField next = op.diagonal_solve(rhs - op.convective_part(y));
    const double update = l2_norm(next - y);
    const double scale = l2_norm(next);
    y = std::move(next);
    report.iterations = it;
    if (update <= tol * scale || scale == 0.0) {
      const double rn = l2_norm(rhs);
      report.defect = rn == 0.0 ? 0.0 : l2_norm(op.apply(y) - rhs) / rn;
      return y;
    }
    if (!std::isfinite(update)) break;
    growth = update > previous_update ? growth + 1 : 0;
    if (growth >= 3) break;
    previous_update = update;
  }

  std::size_t krylov_iters = 0;
  double rel = 0.0;
  // the GMRES residual target is a bit tighter than the fixed-point update target
  SpectralField x = detail::gmres(op, rhs, guess, 0.1 * tol, 10 * max_iters, 40, krylov_iters, rel);
  report.iterations += krylov_iters;
  report.used_krylov = true;
  report.defect = rel;
  if (!(rel <= tol)) {
    throw SolverError("implicit solve did not converge", report.iterations, rel);
  }
  return x;
}

}  // namespace snsde
