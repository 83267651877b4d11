#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/lattice.hpp"
#include "snsde/noise.hpp"
#include "snsde/operators.hpp"
#include "snsde/schemes.hpp"

namespace snsde {

/// Scalar time profile with its derivative.
struct TimeProfile {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Exact solution y = sum_i a_i(t) g_i, p = sum_j b_j(t) pi_j of the
/// transformed equation, driven by noise `noise`; the forcing is assembled so
/// that u = y + Phi W solves the stochastic equation exactly.
struct ManufacturedCase {
  std::string name;
  double nu = 1.0;
  std::vector<SpectralField> velocity_shapes;
  std::vector<TimeProfile> velocity_profiles;
  std::vector<SpectralField> pressure_shapes;
  std::vector<TimeProfile> pressure_profiles;
  NoiseModel noise;
  bool convective = true;  // false: linear Stokes
  bool forced = true;

  const Grid2D& grid() const { return noise.grid(); }
};

struct ExactValue {
  SpectralField y;
  SpectralField p;
};

inline ExactValue eval_exact(const ManufacturedCase& c, double t) {
  ExactValue out{SpectralField(c.grid(), Rank::vector), SpectralField(c.grid(), Rank::scalar)};
  for (std::size_t i = 0; i < c.velocity_shapes.size(); ++i) {
    out.y.axpy(c.velocity_profiles[i].value(t), c.velocity_shapes[i]);
  }
  for (std::size_t j = 0; j < c.pressure_shapes.size(); ++j) {
    out.p.axpy(c.pressure_profiles[j].value(t), c.pressure_shapes[j]);
  }
  return out;
}

/// (1/tau) int_{t_n}^{t_{n+1}} p_exact dt by the trapezoid rule on the lattice.
inline SpectralField averaged_pressure(const ManufacturedCase& c, const BrownianLattice& lat, std::size_t begin,
                                       std::size_t end) {
  SpectralField out(c.grid(), Rank::scalar);
  if (end <= begin) throw DomainError("averaged_pressure: empty index range");
  const double span = static_cast<double>(end - begin);
  for (std::size_t j = 0; j < c.pressure_shapes.size(); ++j) {
    const auto& b = c.pressure_profiles[j].value;
    double s = 0.5 * (b(begin * lat.delta()) + b(end * lat.delta()));
    for (std::size_t i = begin + 1; i < end; ++i) s += b(static_cast<double>(i) * lat.delta());
    out.axpy(s / span, c.pressure_shapes[j]);
  }
  return out;
}

/// Forcing f = d_t y + (u . grad) u - nu Delta u + grad p, u = y + Phi W.
/// Every term is a product of scalar coefficients and fixed spatial fields, so
/// lattice averages reduce to sums of coefficients.
class ManufacturedForcing final : public Forcing {
public:
  explicit ManufacturedForcing(std::shared_ptr<const ManufacturedCase> c) : case_(std::move(c)) {
    const ManufacturedCase& mc = *case_;
    const Grid2D& g = mc.grid();
    A_ = mc.velocity_shapes.size();
    K_ = mc.noise.size();
    // basis e = [g_1..g_A, mu phi_1..mu phi_K]
    std::vector<SpectralField> e = mc.velocity_shapes;
    for (std::size_t k = 0; k < K_; ++k) e.push_back(mc.noise.mode(k) * mc.noise.amplitude());
    const std::size_t B = e.size();
    lap_.reserve(B);
    for (const auto& f : e) lap_.push_back(laplacian(f) * (-mc.nu));
    if (mc.convective) {
      conv_.resize(B * B);
      for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t s = 0; s < B; ++s) conv_[r * B + s] = convect(e[r], e[s], false);
      }
    }
    for (const auto& pi : mc.pressure_shapes) grad_p_.push_back(gradient(pi));
    zero_ = SpectralField(g, Rank::vector);
  }

  SpectralField at_index(const BrownianLattice& lat, std::size_t index) const override {
    return assemble(coefficients(lat, index));
  }

  SpectralField average(const BrownianLattice& lat, std::size_t begin, std::size_t end) const override {
    if (end <= begin) throw DomainError("forcing average over an empty index range");
    std::vector<double> acc(coefficient_count(), 0.0);
    for (std::size_t i = begin; i < end; ++i) {
      const std::vector<double> c = coefficients(lat, i);
      for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += c[m];
    }
    for (double& v : acc) v /= static_cast<double>(end - begin);
    return assemble(acc);
  }

private:
  std::size_t basis_size() const { return A_ + K_; }
  std::size_t coefficient_count() const {
    const std::size_t B = basis_size();
    return A_ + B + (case_->convective ? B * B : 0) + grad_p_.size();
  }

  // Layout: [a'_i | c_r (diffusion) | c_r c_s (convection) | b_j].
  std::vector<double> coefficients(const BrownianLattice& lat, std::size_t index) const {
    const ManufacturedCase& mc = *case_;
    if (index > lat.steps()) throw LatticeError("forcing requested beyond the lattice horizon");
    if (lat.modes() != K_) throw ShapeError("lattice and manufactured noise disagree on the mode count");
    const double t = static_cast<double>(index) * lat.delta();
    const std::size_t B = basis_size();
    std::vector<double> c(B);
    for (std::size_t i = 0; i < A_; ++i) c[i] = mc.velocity_profiles[i].value(t);
    for (std::size_t k = 0; k < K_; ++k) c[A_ + k] = lat.value(k, index);
    std::vector<double> out;
    out.reserve(coefficient_count());
    for (std::size_t i = 0; i < A_; ++i) out.push_back(mc.velocity_profiles[i].derivative(t));
    out.insert(out.end(), c.begin(), c.end());
    if (mc.convective) {
      for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t s = 0; s < B; ++s) out.push_back(c[r] * c[s]);
      }
    }
    for (std::size_t j = 0; j < grad_p_.size(); ++j) out.push_back(mc.pressure_profiles[j].value(t));
    return out;
  }

  SpectralField assemble(const std::vector<double>& w) const {
    const ManufacturedCase& mc = *case_;
    const std::size_t B = basis_size();
    SpectralField f = zero_;
    std::size_t m = 0;
    for (std::size_t i = 0; i < A_; ++i) f.axpy(w[m++], mc.velocity_shapes[i]);
    for (std::size_t r = 0; r < B; ++r) f.axpy(w[m++], lap_[r]);
    if (mc.convective) {
      for (std::size_t rs = 0; rs < B * B; ++rs) f.axpy(w[m++], conv_[rs]);
    }
    for (const auto& gp : grad_p_) f.axpy(w[m++], gp);
    return f;
  }

  std::shared_ptr<const ManufacturedCase> case_;
  std::size_t A_ = 0;
  std::size_t K_ = 0;
  std::vector<SpectralField> lap_;
  std::vector<SpectralField> conv_;
  std::vector<SpectralField> grad_p_;
  SpectralField zero_;
};

/// Physical samples of the forcing at a lattice point.
inline PhysicalField eval_forcing(const ManufacturedForcing& forcing, const BrownianLattice& lat,
                                  std::size_t index) {
  return transform_backward(forcing.at_index(lat, index));
}

inline std::shared_ptr<const Forcing> make_forcing(std::shared_ptr<const ManufacturedCase> c) {
  if (!c->forced) return nullptr;
  return std::make_shared<ManufacturedForcing>(std::move(c));
}

// ---------------------------------------------------------------------------
// Named cases

struct CaseParams {
  std::size_t grid = 32;
  double nu = 1.0;
  std::optional<double> amplitude;  // overrides the case default
  std::optional<std::string> noise_modes;  // overrides the case default mode list (one expression per mode)
  std::vector<bool> solenoidal;  // flags for noise_modes, default all true
};

inline const std::vector<std::string>& case_names() {
  static const std::vector<std::string> names = {"taylor-green",        "taylor-green-mixed", "stokes-taylor-green",
                                                 "taylor-green-k4",     "taylor-green-decay", "zero"};
  return names;
}

namespace detail {

inline std::vector<std::string> split_modes(const std::string& spec) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : spec) {
    if (ch == ';') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline NoiseModel build_noise(Grid2D g, const std::vector<std::string>& default_modes, double default_amplitude,
                              const CaseParams& params) {
  std::vector<std::string> exprs = params.noise_modes ? split_modes(*params.noise_modes) : default_modes;
  std::vector<SpectralField> modes;
  for (const auto& e : exprs) modes.push_back(parse_mode(g, e));
  std::vector<bool> flags = params.solenoidal;
  if (flags.empty()) flags.assign(modes.size(), true);
  if (flags.size() != modes.size()) throw ConfigError("one solenoidal flag per noise mode expected");
  return NoiseModel(std::move(modes), params.amplitude.value_or(default_amplitude), std::move(flags));
}

}  // namespace detail

/// Build a named case. Velocity shape for the Taylor-Green family is
/// g = (cos 2 pi x1 sin 2 pi x2, -sin 2 pi x1 cos 2 pi x2) with amplitude
/// 2 cos(6t); pressure t (cos 4 pi x1 + cos 4 pi x2) / 4.
inline std::shared_ptr<const ManufacturedCase> make_case(const std::string& name, const CaseParams& params = {}) {
  const Grid2D g(params.grid);
  if (!(params.nu > 0.0)) throw ConfigError("viscosity must be positive");
  auto c = std::make_shared<ManufacturedCase>(ManufacturedCase{name, params.nu, {}, {}, {}, {}, NoiseModel::none(g)});
  const SpectralField tg = taylor_green(g);
  const SpectralField tg_pressure = spectral_from(g, Rank::scalar, [](int, double x1, double x2) {
    return 0.25 * (std::cos(2.0 * two_pi * x1) + std::cos(2.0 * two_pi * x2));
  });
  const TimeProfile cos6{[](double t) { return 2.0 * std::cos(6.0 * t); },
                         [](double t) { return -12.0 * std::sin(6.0 * t); }};
  const TimeProfile linear{[](double t) { return t; }, [](double) { return 1.0; }};

  auto taylor_green_family = [&](std::vector<std::string> modes, double amplitude) {
    c->velocity_shapes = {tg};
    c->velocity_profiles = {cos6};
    c->pressure_shapes = {tg_pressure};
    c->pressure_profiles = {linear};
    c->noise = detail::build_noise(g, modes, amplitude, params);
  };

  if (name == "taylor-green") {
    taylor_green_family({"tg(1,1)"}, 4.0);
  } else if (name == "taylor-green-mixed") {
    taylor_green_family({"tg(1,1)+tg(1,2)"}, 4.0);
  } else if (name == "stokes-taylor-green") {
    taylor_green_family({"tg(1,1)"}, 4.0);
    c->convective = false;
  } else if (name == "taylor-green-k4") {
    taylor_green_family({"tg(1,1)", "tg(1,2)", "tg(2,1)", "tg(1,1,0.125,0.125)"}, 1.0);
  } else if (name == "taylor-green-decay") {
    const double rate = 2.0 * two_pi * two_pi * params.nu;  // nu |k|^2 = 8 pi^2 nu
    c->velocity_shapes = {tg};
    c->velocity_profiles = {TimeProfile{[rate](double t) { return std::exp(-rate * t); },
                                        [rate](double t) { return -rate * std::exp(-rate * t); }}};
    // (g . grad) g is a pure gradient; the pressure balances it
    c->pressure_shapes = {scalar_potential(convect(tg, tg, false)) * -1.0};
    c->pressure_profiles = {TimeProfile{[rate](double t) { return std::exp(-2.0 * rate * t); },
                                        [rate](double t) { return -2.0 * rate * std::exp(-2.0 * rate * t); }}};
    c->noise = detail::build_noise(g, {"tg(1,1)"}, 0.0, params);
    c->forced = false;
  } else if (name == "zero") {
    c->noise = detail::build_noise(g, {"tg(1,1)"}, 0.0, params);
    c->forced = false;
  } else {
    throw ConfigError("unknown manufactured case '" + name + "'");
  }
  if (c->forced && !c->noise.all_solenoidal()) {
    throw ConfigError("forced cases need solenoidal noise modes (the exact solution is written for y = u - Phi W)");
  }
  return c;
}

}  // namespace snsde
