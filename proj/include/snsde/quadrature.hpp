#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/lattice.hpp"
#include "snsde/noise.hpp"

namespace snsde {

/// Index geometry of one macro step [t_n, t_n + tau] on a lattice, with the
/// micro mesh t_{n,l} = t_n + l tau^2, l = 0..M, M = 1/tau.
struct MicroMesh {
  std::size_t M = 0;             // micro cells per macro step
  std::size_t micro_stride = 0;  // lattice steps per micro cell
  std::size_t macro_stride = 0;  // lattice steps per macro step
  std::size_t start = 0;         // lattice index of t_n

  std::size_t micro_index(std::size_t l) const noexcept { return start + l * micro_stride; }
  std::size_t end() const noexcept { return start + macro_stride; }
};

/// True when 1/tau is an integer.
inline bool has_integral_micro_count(double tau) {
  if (!(tau > 0.0) || tau > 1.0) return false;
  const double m = 1.0 / tau;
  return std::abs(m - std::round(m)) <= 1e-9 * m;
}

inline MicroMesh micro_mesh(const BrownianLattice& lat, std::size_t n, double tau) {
  if (!has_integral_micro_count(tau)) {
    throw LatticeError("time step " + std::to_string(tau) + " does not give an integral micro count 1/tau");
  }
  MicroMesh mesh;
  mesh.M = static_cast<std::size_t>(std::llround(1.0 / tau));
  mesh.micro_stride = lat.stride(tau * tau);
  mesh.macro_stride = mesh.M * mesh.micro_stride;
  if (mesh.macro_stride != lat.stride(tau)) throw LatticeError("micro mesh does not tile the macro step");
  mesh.start = n * mesh.macro_stride;
  if (mesh.end() > lat.steps()) throw LatticeError("step " + std::to_string(n) + " runs past the lattice horizon");
  return mesh;
}

/// Right-endpoint micro-mesh average I_n^W = sum_{l=1}^M tau W(t_{n,l}), per mode.
inline std::vector<double> quadrature_IW(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = micro_mesh(lat, n, tau);
  std::vector<double> out(lat.modes(), 0.0);
  for (std::size_t k = 0; k < lat.modes(); ++k) {
    double s = 0.0;
    for (std::size_t l = 1; l <= mesh.M; ++l) s += lat.value(k, mesh.micro_index(l));
    out[k] = tau * s;
  }
  return out;
}

struct AverageQuadrature {
  std::vector<double> per_mode;
  SpectralField field;  // Phi I^W, amplitude included
};

inline void require_matching_modes(const BrownianLattice& lat, const NoiseModel& noise);

inline AverageQuadrature quadrature_IW(const BrownianLattice& lat, const NoiseModel& noise, std::size_t n,
                                       double tau) {
  require_matching_modes(lat, noise);
  AverageQuadrature q{quadrature_IW(lat, n, tau), {}};
  q.field = noise.full(q.per_mode);
  return q;
}

/// Coefficient matrix C_kj = tau sum_l (W_k(t_{n,l}) - I_k)(W_j(t_{n,l}) - I_j), K x K row-major.
inline std::vector<double> quadrature_IW2_coefficients(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = micro_mesh(lat, n, tau);
  const std::vector<double> avg = quadrature_IW(lat, n, tau);
  const std::size_t K = lat.modes();
  std::vector<double> c(K * K, 0.0);
  std::vector<double> d(K);
  for (std::size_t l = 1; l <= mesh.M; ++l) {
    for (std::size_t k = 0; k < K; ++k) d[k] = lat.value(k, mesh.micro_index(l)) - avg[k];
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) c[k * K + j] += d[k] * d[j];
    }
  }
  for (double& v : c) v *= tau;
  return c;
}

inline void require_matching_modes(const BrownianLattice& lat, const NoiseModel& noise) {
  if (lat.modes() != noise.size()) {
    throw ShapeError("lattice carries " + std::to_string(lat.modes()) + " Wiener coordinates, noise model has " +
                     std::to_string(noise.size()) + " modes");
  }
}

/// Matrix-valued triple-integral quadrature I_n^{W^2}, computed in the one-loop
/// form tau sum_l (Phi W(t_{n,l}) - Phi I_n^W) (x) (Phi W(t_{n,l}) - Phi I_n^W).
inline SpectralField quadrature_IW2(const BrownianLattice& lat, const NoiseModel& noise, std::size_t n, double tau) {
  require_matching_modes(lat, noise);
  return noise.outer_combination(quadrature_IW2_coefficients(lat, n, tau));
}

// ---------------------------------------------------------------------------
// High-resolution oracles on the full lattice (trapezoid rule).

inline MicroMesh oracle_mesh(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = micro_mesh(lat, n, tau);
  if (mesh.micro_stride < 2) throw LatticeError("oracle needs a lattice strictly finer than the micro mesh");
  return mesh;
}

/// Q_n^W = (1/tau) int_{t_n}^{t_{n+1}} W(s) ds, per mode.
inline std::vector<double> oracle_QW(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = oracle_mesh(lat, n, tau);
  std::vector<double> out(lat.modes(), 0.0);
  for (std::size_t k = 0; k < lat.modes(); ++k) {
    double s = 0.5 * (lat.value(k, mesh.start) + lat.value(k, mesh.end()));
    for (std::size_t i = mesh.start + 1; i < mesh.end(); ++i) s += lat.value(k, i);
    out[k] = s * lat.delta() / tau;
  }
  return out;
}

/// Reduced form of the triple integral: (1/tau) int (W_k - Q_k)(W_j - Q_j) dt, K x K row-major.
inline std::vector<double> oracle_QW2_coefficients(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = oracle_mesh(lat, n, tau);
  const std::vector<double> avg = oracle_QW(lat, n, tau);
  const std::size_t K = lat.modes();
  std::vector<double> c(K * K, 0.0);
  std::vector<double> d(K);
  for (std::size_t i = mesh.start; i <= mesh.end(); ++i) {
    const double w = (i == mesh.start || i == mesh.end()) ? 0.5 : 1.0;
    for (std::size_t k = 0; k < K; ++k) d[k] = lat.value(k, i) - avg[k];
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) c[k * K + j] += w * d[k] * d[j];
    }
  }
  for (double& v : c) v *= lat.delta() / tau;
  return c;
}

inline SpectralField oracle_QW2(const BrownianLattice& lat, const NoiseModel& noise, std::size_t n, double tau) {
  require_matching_modes(lat, noise);
  return noise.outer_combination(oracle_QW2_coefficients(lat, n, tau));
}

// ---------------------------------------------------------------------------

/// Per-mode correction terms of the SPDE-form step.
struct Corrections {
  std::vector<double> J_star;  // I_n^W - 3/2 W(t_n) + 1/2 W(t_{n-1})
  std::vector<double> J_mid;   // I_n^W - 1/2 (W(t_{n+1}) + W(t_n))
  std::vector<double> dW;      // W(t_{n+1}) - W(t_n)
};

/// W(t_{-1}) is taken as W(0) = 0.
inline Corrections corrections(const BrownianLattice& lat, std::size_t n, double tau) {
  const MicroMesh mesh = micro_mesh(lat, n, tau);
  const std::vector<double> avg = quadrature_IW(lat, n, tau);
  Corrections c;
  const std::size_t K = lat.modes();
  c.J_star.resize(K);
  c.J_mid.resize(K);
  c.dW.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double w_now = lat.value(k, mesh.start);
    const double w_next = lat.value(k, mesh.end());
    const double w_prev = n == 0 ? 0.0 : lat.value(k, mesh.start - mesh.macro_stride);
    c.J_star[k] = avg[k] - 1.5 * w_now + 0.5 * w_prev;
    c.J_mid[k] = avg[k] - 0.5 * (w_next + w_now);
    c.dW[k] = w_next - w_now;
  }
  return c;
}

/// W_k(t) at a lattice index, all modes.
inline std::vector<double> lattice_values(const BrownianLattice& lat, std::size_t index) {
  std::vector<double> w(lat.modes());
  for (std::size_t k = 0; k < lat.modes(); ++k) w[k] = lat.value(k, index);
  return w;
}

}  // namespace snsde
