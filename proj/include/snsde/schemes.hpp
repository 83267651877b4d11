#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/lattice.hpp"
#include "snsde/noise.hpp"
#include "snsde/operators.hpp"
#include "snsde/quadrature.hpp"
#include "snsde/solver.hpp"

namespace snsde {

enum class Variant { CN_RPDE, CN_SPDE, CN_NO_IW2, EULER_SI, EULER_SIS, EULER_IE1, STOKES_CN };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::CN_RPDE: return "CN_RPDE";
    case Variant::CN_SPDE: return "CN_SPDE";
    case Variant::CN_NO_IW2: return "CN_NO_IW2";
    case Variant::EULER_SI: return "EULER_SI";
    case Variant::EULER_SIS: return "EULER_SIS";
    case Variant::EULER_IE1: return "EULER_IE1";
    case Variant::STOKES_CN: return "STOKES_CN";
  }
  return "?";
}

/// Accepts the canonical names plus the short forms CN, SI, SIS, IE1, STOKES.
inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::CN_RPDE, Variant::CN_SPDE, Variant::CN_NO_IW2, Variant::EULER_SI, Variant::EULER_SIS,
                    Variant::EULER_IE1, Variant::STOKES_CN}) {
    if (s == to_string(v)) return v;
  }
  if (s == "CN") return Variant::CN_RPDE;
  if (s == "SI") return Variant::EULER_SI;
  if (s == "SIS") return Variant::EULER_SIS;
  if (s == "IE1") return Variant::EULER_IE1;
  if (s == "STOKES") return Variant::STOKES_CN;
  throw ConfigError("unknown scheme variant '" + std::string(s) + "'");
}

inline bool is_euler(Variant v) noexcept {
  return v == Variant::EULER_SI || v == Variant::EULER_SIS || v == Variant::EULER_IE1;
}

/// Body force, possibly path dependent, sampled on the noise lattice.
class Forcing {
public:
  virtual ~Forcing() = default;

  /// f at lattice point `index`.
  virtual SpectralField at_index(const BrownianLattice& lat, std::size_t index) const = 0;

  /// Left-point Riemann mean of f over lattice points [begin, end).
  virtual SpectralField average(const BrownianLattice& lat, std::size_t begin, std::size_t end) const {
    if (end <= begin) throw DomainError("forcing average over an empty index range");
    SpectralField acc = at_index(lat, begin);
    for (std::size_t i = begin + 1; i < end; ++i) acc += at_index(lat, i);
    acc *= 1.0 / static_cast<double>(end - begin);
    return acc;
  }
};

/// True for tau = 2^-j with j >= 2.
inline bool is_dyadic_step(double tau) {
  if (!(tau > 0.0) || tau > 0.25) return false;
  int e = 0;
  const double m = std::frexp(tau, &e);
  return m == 0.5;
}

struct SchemeConfig {
  Variant variant = Variant::CN_RPDE;
  double nu = 1.0;
  double tau = 0.125;
  double fixed_point_tol = 1e-10;
  std::size_t fixed_point_max_iters = 100;
  bool dealias = true;
  std::shared_ptr<const Forcing> forcing;

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("viscosity must be positive");
    if (!is_dyadic_step(tau)) throw DomainError("time step must be 2^-j with j >= 2, got " + std::to_string(tau));
    if (!(fixed_point_tol > 0.0)) throw DomainError("solver tolerance must be positive");
    if (fixed_point_max_iters < 1) throw DomainError("solver iteration cap must be at least 1");
  }
};

/// (y_n, y_{n-1}) plus the pressure pair at t_n. For CN_SPDE the velocity pair
/// holds u instead of y. `p_curr` is the physical pressure, `q_curr` the
/// pressure of the transformed problem; they differ only for noise with a
/// gradient part.
struct SchemeState {
  SpectralField y_curr;
  SpectralField y_prev;
  SpectralField p_curr;
  SpectralField q_curr;
  std::size_t step_index = 0;
  double time = 0.0;
  std::size_t iterations = 0;  // solver sweeps of the last step
  bool used_krylov = false;
};

inline SchemeState initial_state(const SpectralField& y0) {
  SpectralField::require_rank(y0, Rank::vector, "initial_state");
  SchemeState s;
  s.y_curr = y0;
  s.y_prev = y0;
  s.p_curr = SpectralField(y0.grid(), Rank::scalar);
  s.q_curr = s.p_curr;
  return s;
}

/// Mean-zero p with grad p = (I - P) residual.
inline SpectralField recover_pressure(const SpectralField& momentum_residual) {
  return scalar_potential(momentum_residual);
}

/// Solve (1/tau - nu/2 Delta) y + 1/2 P[(a . grad) y] = rhs.
inline SpectralField solve_linear_step(const SpectralField& a, const SpectralField& rhs, const SchemeConfig& config,
                                       SolveReport* report = nullptr, const SpectralField* guess = nullptr) {
  const Advector adv(a, config.dealias);
  ImplicitOperator op{1.0 / config.tau, 0.5 * config.nu, 0.5, &adv, false};
  SolveReport local;
  SpectralField y =
      solve_implicit(op, rhs, guess ? *guess : rhs * config.tau, config.fixed_point_tol,
                     config.fixed_point_max_iters, local);
  if (report) *report = local;
  return y;
}

namespace detail {

inline void check_step_inputs(const SchemeState& state, const SchemeConfig& config, const BrownianLattice& lat,
                              const NoiseModel& noise, std::size_t n) {
  config.validate();
  require_matching_modes(lat, noise);
  if (!(state.y_curr.grid() == noise.grid())) throw ShapeError("state and noise model live on different grids");
  if (state.step_index != n) {
    throw DomainError("state is at step " + std::to_string(state.step_index) + ", asked to advance step " +
                      std::to_string(n));
  }
}

inline SpectralField forcing_average(const SchemeConfig& config, const BrownianLattice& lat, const MicroMesh& mesh,
                                     const Grid2D& g) {
  if (!config.forcing) return SpectralField(g, Rank::vector);
  return config.forcing->average(lat, mesh.start, mesh.end());
}

inline SchemeState advance(const SchemeState& state, SpectralField y_next, SpectralField p, SpectralField q,
                           double tau, const SolveReport& report) {
  SchemeState out;
  out.y_prev = state.y_curr;
  out.y_curr = std::move(y_next);
  out.p_curr = std::move(p);
  out.q_curr = std::move(q);
  out.step_index = state.step_index + 1;
  out.time = static_cast<double>(out.step_index) * tau;
  out.iterations = report.iterations;
  out.used_krylov = report.used_krylov;
  return out;
}

// The CN momentum balance shared by both forms: advecting field a, convected
// field b = v_mid + c (with v_mid the unknown midpoint), diffused field the
// same b. `extra` is the explicit source (forcing average, noise increment).
struct CnPieces {
  SpectralField a;          // advecting field
  SpectralField shift;      // c: b = v^{n+1/2} + c
  SpectralField div_iw2;    // div of the triple-integral term, unprojected
  SpectralField source;     // explicit right side
};

inline SpectralField cn_solve(const SchemeState& state, const SchemeConfig& config, const CnPieces& pc,
                              SolveReport& report) {
  const SpectralField& vn = state.y_curr;
  const double tau = config.tau;
  const double nu = config.nu;
  const Advector adv(pc.a, config.dealias);
  SpectralField known = vn * (1.0 / tau);
  known.axpy(0.5 * nu, laplacian(vn));
  known.axpy(nu, laplacian(pc.shift));
  known -= adv.convect(vn * 0.5 + pc.shift);
  known -= pc.div_iw2;
  known += pc.source;
  const SpectralField rhs = leray_project(known);
  ImplicitOperator op{1.0 / tau, 0.5 * nu, 0.5, &adv, false};
  return solve_implicit(op, rhs, vn, config.fixed_point_tol, config.fixed_point_max_iters, report);
}

inline SpectralField cn_residual(const SchemeState& state, const SpectralField& v_next, const SchemeConfig& config,
                                 const CnPieces& pc) {
  const Advector adv(pc.a, config.dealias);
  SpectralField b = (state.y_curr + v_next) * 0.5;
  b += pc.shift;
  SpectralField r = pc.source;
  r -= (v_next - state.y_curr) * (1.0 / config.tau);
  r -= adv.convect(b);
  r -= pc.div_iw2;
  r.axpy(config.nu, laplacian(b));
  return r;
}

}  // namespace detail

/// One step of the linear Crank-Nicolson scheme for the transformed (random)
/// equation. Handles CN_RPDE and the CN_NO_IW2 ablation.
inline SchemeState step_cn_rpde(const SchemeState& state, const SchemeConfig& config, const BrownianLattice& lat,
                                const NoiseModel& noise, std::size_t n) {
  detail::check_step_inputs(state, config, lat, noise, n);
  const double tau = config.tau;
  const Grid2D& g = state.y_curr.grid();
  const MicroMesh mesh = micro_mesh(lat, n, tau);

  const std::vector<double> iw = quadrature_IW(lat, n, tau);
  detail::CnPieces pc;
  pc.shift = noise.transported(iw);
  pc.a = state.y_curr * 1.5;
  pc.a.axpy(-0.5, state.y_prev);
  pc.a += pc.shift;
  pc.div_iw2 = config.variant == Variant::CN_NO_IW2 || noise.is_off()
                   ? SpectralField(g, Rank::vector)
                   : tensor_divergence(quadrature_IW2(lat, noise, n, tau));
  pc.source = detail::forcing_average(config, lat, mesh, g);

  SolveReport report;
  SpectralField y_next = detail::cn_solve(state, config, pc, report);
  SpectralField q = recover_pressure(detail::cn_residual(state, y_next, config, pc));
  SpectralField p = q;
  if (!noise.all_solenoidal()) {
    const Corrections c = corrections(lat, n, tau);
    p.axpy(1.0 / tau, noise.potential(c.dW));
  }
  return detail::advance(state, std::move(y_next), std::move(p), std::move(q), tau, report);
}

/// The same scheme written for u = y + Psi W: correction terms J*, J and the
/// increment source Phi dW / tau.
inline SchemeState step_cn_spde(const SchemeState& state_u, const SchemeConfig& config, const BrownianLattice& lat,
                                const NoiseModel& noise, std::size_t n) {
  detail::check_step_inputs(state_u, config, lat, noise, n);
  const double tau = config.tau;
  const Grid2D& g = state_u.y_curr.grid();
  const MicroMesh mesh = micro_mesh(lat, n, tau);

  const Corrections c = corrections(lat, n, tau);
  detail::CnPieces pc;
  pc.shift = noise.transported(c.J_mid);
  pc.a = state_u.y_curr * 1.5;
  pc.a.axpy(-0.5, state_u.y_prev);
  pc.a += noise.transported(c.J_star);
  pc.div_iw2 = noise.is_off() ? SpectralField(g, Rank::vector)
                              : tensor_divergence(quadrature_IW2(lat, noise, n, tau));
  pc.source = detail::forcing_average(config, lat, mesh, g);
  pc.source.axpy(1.0 / tau, noise.full(c.dW));

  SolveReport report;
  SpectralField u_next = detail::cn_solve(state_u, config, pc, report);
  SpectralField p = recover_pressure(detail::cn_residual(state_u, u_next, config, pc));
  SpectralField q = p;
  if (!noise.all_solenoidal()) q.axpy(-1.0 / tau, noise.potential(c.dW));
  return detail::advance(state_u, std::move(u_next), std::move(p), std::move(q), tau, report);
}

/// Semi-implicit backward Euler with skew-symmetric convection,
///   (y' - y_n)/tau + P C*(U, y' + Psi W^{n+1}) - nu Delta (y' + Psi W^{n+1}) = P f(t_{n+1}),
/// U = y_n + Psi W^n (SI), y_n + Psi W^{n+1} (SIS), y* + Psi W^{n+1} (IE1, y*
/// the SIS solution).
inline SchemeState step_euler(const SchemeState& state, const SchemeConfig& config, const BrownianLattice& lat,
                              const NoiseModel& noise, std::size_t n, Variant variant) {
  detail::check_step_inputs(state, config, lat, noise, n);
  if (!is_euler(variant)) throw DomainError("step_euler called with " + to_string(variant));
  const double tau = config.tau;
  const double nu = config.nu;
  const Grid2D& g = state.y_curr.grid();
  const MicroMesh mesh = micro_mesh(lat, n, tau);

  const SpectralField noise_now = noise.transported(lattice_values(lat, mesh.start));
  const SpectralField noise_next = noise.transported(lattice_values(lat, mesh.end()));
  SpectralField f = config.forcing ? config.forcing->at_index(lat, mesh.end()) : SpectralField(g, Rank::vector);

  auto solve_with = [&](const SpectralField& U, SolveReport& report) {
    const Advector adv(U, config.dealias);
    SpectralField known = state.y_curr * (1.0 / tau);
    known.axpy(nu, laplacian(noise_next));
    known -= adv.convect_skew(noise_next);
    known += f;
    ImplicitOperator op{1.0 / tau, nu, 1.0, &adv, true};
    SpectralField y = solve_implicit(op, leray_project(known), state.y_curr, config.fixed_point_tol,
                                     config.fixed_point_max_iters, report);
    return std::pair{std::move(y), U};
  };

  SolveReport report;
  SpectralField U = state.y_curr + (variant == Variant::EULER_SI ? noise_now : noise_next);
  auto [y_next, used_U] = solve_with(U, report);
  if (variant == Variant::EULER_IE1) {
    SolveReport second;
    auto [y2, U2] = solve_with(y_next + noise_next, second);
    second.iterations += report.iterations;
    report = second;
    y_next = std::move(y2);
    used_U = std::move(U2);
  }

  const Advector adv(used_U, config.dealias);
  const SpectralField v = y_next + noise_next;
  SpectralField r = f;
  r -= (y_next - state.y_curr) * (1.0 / tau);
  r -= adv.convect_skew(v);
  r.axpy(nu, laplacian(v));
  SpectralField q = recover_pressure(r);
  SpectralField p = q;
  if (!noise.all_solenoidal()) {
    const Corrections c = corrections(lat, n, tau);
    p.axpy(1.0 / tau, noise.potential(c.dW));
  }
  return detail::advance(state, std::move(y_next), std::move(p), std::move(q), tau, report);
}

/// CN for the linear stochastic Stokes system: the CN step without convection
/// and without the triple-integral term. The solve is diagonal.
inline SchemeState step_stokes_cn(const SchemeState& state, const SchemeConfig& config, const BrownianLattice& lat,
                                  const NoiseModel& noise, std::size_t n) {
  detail::check_step_inputs(state, config, lat, noise, n);
  const double tau = config.tau;
  const double nu = config.nu;
  const Grid2D& g = state.y_curr.grid();
  const MicroMesh mesh = micro_mesh(lat, n, tau);

  const SpectralField shift = noise.transported(quadrature_IW(lat, n, tau));
  const SpectralField source = detail::forcing_average(config, lat, mesh, g);
  SpectralField known = state.y_curr * (1.0 / tau);
  known.axpy(0.5 * nu, laplacian(state.y_curr));
  known.axpy(nu, laplacian(shift));
  known += source;
  ImplicitOperator op{1.0 / tau, 0.5 * nu, 0.0, nullptr, false};
  SolveReport report;
  SpectralField y_next = solve_implicit(op, leray_project(known), state.y_curr, config.fixed_point_tol,
                                        config.fixed_point_max_iters, report);

  SpectralField b = (state.y_curr + y_next) * 0.5;
  b += shift;
  SpectralField r = source;
  r -= (y_next - state.y_curr) * (1.0 / tau);
  r.axpy(nu, laplacian(b));
  SpectralField q = recover_pressure(r);
  SpectralField p = q;
  if (!noise.all_solenoidal()) {
    const Corrections c = corrections(lat, n, tau);
    p.axpy(1.0 / tau, noise.potential(c.dW));
  }
  return detail::advance(state, std::move(y_next), std::move(p), std::move(q), tau, report);
}

/// Dispatch on config.variant.
inline SchemeState step(const SchemeState& state, const SchemeConfig& config, const BrownianLattice& lat,
                        const NoiseModel& noise, std::size_t n) {
  switch (config.variant) {
    case Variant::CN_RPDE:
    case Variant::CN_NO_IW2: return step_cn_rpde(state, config, lat, noise, n);
    case Variant::CN_SPDE: return step_cn_spde(state, config, lat, noise, n);
    case Variant::STOKES_CN: return step_stokes_cn(state, config, lat, noise, n);
    case Variant::EULER_SI:
    case Variant::EULER_SIS:
    case Variant::EULER_IE1: return step_euler(state, config, lat, noise, n, config.variant);
  }
  throw DomainError("unhandled variant");
}

/// Velocity of the transformed problem at step n: y_n itself, or u_n - Psi W(t_n)
/// for the u-form variant.
inline SpectralField transformed_velocity(const SchemeState& state, Variant variant, const BrownianLattice& lat,
                                          const NoiseModel& noise, double tau) {
  if (variant != Variant::CN_SPDE) return state.y_curr;
  const std::size_t idx = state.step_index * lat.stride(tau);
  return state.y_curr - noise.transported(lattice_values(lat, idx));
}

/// Physical velocity u_n = y_n + Psi W(t_n).
inline SpectralField physical_velocity(const SchemeState& state, Variant variant, const BrownianLattice& lat,
                                       const NoiseModel& noise, double tau) {
  if (variant == Variant::CN_SPDE) return state.y_curr;
  const std::size_t idx = state.step_index * lat.stride(tau);
  return state.y_curr + noise.transported(lattice_values(lat, idx));
}

}  // namespace snsde
