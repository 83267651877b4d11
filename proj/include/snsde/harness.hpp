#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/lattice.hpp"
#include "snsde/manufactured.hpp"
#include "snsde/noise.hpp"
#include "snsde/quadrature.hpp"
#include "snsde/schemes.hpp"
#include "snsde/stats.hpp"

namespace snsde {

/// Per-path seed derived from the study seed.
inline std::uint64_t path_seed(std::uint64_t base_seed, std::size_t path) {
  return mix_seed(base_seed + mix_seed(static_cast<std::uint64_t>(path)));
}

/// Run `work(i)` for i in [0, count) on up to `threads` workers.
template <class Work>
void parallel_for(std::size_t count, std::size_t threads, Work&& work) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Convergence studies

struct StudyConfig {
  std::string case_name = "taylor-green-mixed";
  CaseParams case_params;
  double horizon = 1.0;
  std::vector<Variant> variants = {Variant::CN_RPDE};
  std::vector<double> taus = {0.125, 0.0625, 0.03125, 0.015625};
  std::size_t samples = 16;
  std::uint64_t base_seed = 1;
  std::size_t refinement = 16;  // lattice step = (min tau)^2 / refinement
  double tol = 1e-10;
  std::size_t max_iters = 100;
  bool dealias = true;
  std::size_t threads = 1;

  void validate() const {
    if (taus.empty()) throw ConfigError("tau ladder is empty");
    if (variants.empty()) throw ConfigError("no scheme variants selected");
    if (samples < 1) throw ConfigError("need at least one sample path");
    if (refinement < 1) throw ConfigError("lattice refinement must be at least 1");
    for (std::size_t i = 0; i < taus.size(); ++i) {
      if (!is_dyadic_step(taus[i])) throw ConfigError("tau ladder entries must be 2^-j with j >= 2");
      if (i > 0 && !(taus[i] < taus[i - 1])) throw ConfigError("tau ladder must be strictly decreasing");
      const double steps = horizon / taus[i];
      if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
        throw ConfigError("horizon is not a whole number of steps for tau = " + std::to_string(taus[i]));
      }
    }
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  }

  double lattice_step() const { return taus.back() * taus.back() / static_cast<double>(refinement); }
};

struct ErrorRow {
  Variant variant;
  double tau = 0.0;
  double err_vel_l2 = 0.0;
  double stderr_vel = 0.0;
  double err_h1_mid = 0.0;
  double stderr_h1 = 0.0;
  double err_press = 0.0;
  double stderr_press = 0.0;
  std::size_t samples = 0;
  std::size_t failures = 0;
};

struct RateRow {
  Variant variant;
  std::string functional;  // vel_l2, h1_mid, press
  double slope = 0.0;
  double slope_stderr = 0.0;
};

struct CellFailure {
  std::size_t path = 0;
  Variant variant;
  double tau = 0.0;
  std::string message;
};

/// Mean-square error estimates; slopes are fitted to the mean-square values.
struct ErrorTable {
  std::vector<ErrorRow> rows;
  std::vector<RateRow> rates;
  std::vector<CellFailure> failures;
  std::vector<std::string> warnings;

  const ErrorRow* find(Variant v, double tau) const {
    for (const auto& r : rows) {
      if (r.variant == v && r.tau == tau) return &r;
    }
    return nullptr;
  }
  const RateRow* rate(Variant v, const std::string& functional) const {
    for (const auto& r : rates) {
      if (r.variant == v && r.functional == functional) return &r;
    }
    return nullptr;
  }
};

/// Scheme step signature; the default is snsde::step.
using Stepper = std::function<SchemeState(const SchemeState&, const SchemeConfig&, const BrownianLattice&,
                                          const NoiseModel&, std::size_t)>;

/// Squared errors of one trajectory.
struct PathErrors {
  double vel_max = 0.0;  // max_n ||y(t_n) - y_n||^2
  double h1_mid = 0.0;   // tau sum_n ||grad(ybar^{n+1/2} - y^{n+1/2})||^2
  double press = 0.0;    // tau sum_n ||pbar_n - p_{n+1}||^2
};

/// Integrate one path with one scheme and compare against the exact solution
/// on the macro nodes. ybar^{n+1/2} is the midpoint of the exact nodal values,
/// pbar_n the lattice trapezoid average of the exact pressure over the step.
inline PathErrors run_path(const ManufacturedCase& mc, const SchemeConfig& config, const BrownianLattice& lat,
                           double horizon, const Stepper& stepper = {}) {
  const double tau = config.tau;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / tau));
  const std::size_t stride = lat.stride(tau);
  PathErrors e;
  ExactValue exact = eval_exact(mc, 0.0);
  SchemeState state = initial_state(exact.y);
  SpectralField y_prev = exact.y;
  for (std::size_t n = 0; n < steps; ++n) {
    state = stepper ? stepper(state, config, lat, mc.noise, n) : step(state, config, lat, mc.noise, n);
    const ExactValue next = eval_exact(mc, static_cast<double>(n + 1) * tau);
    const SpectralField y = transformed_velocity(state, config.variant, lat, mc.noise, tau);
    const double ev = norms(next.y - y).l2;
    e.vel_max = std::max(e.vel_max, ev * ev);
    const SpectralField mid_err = (exact.y + next.y - y_prev - y) * 0.5;
    const double eh = norms(mid_err).h1_semi;
    e.h1_mid += tau * eh * eh;
    const SpectralField pbar = averaged_pressure(mc, lat, n * stride, (n + 1) * stride);
    const double ep = l2_norm(pbar - state.p_curr);
    e.press += tau * ep * ep;
    exact = next;
    y_prev = y;
  }
  return e;
}

namespace detail {

inline void fit_rates(ErrorTable& table, const std::vector<Variant>& variants) {
  const char* names[] = {"vel_l2", "h1_mid", "press"};
  for (Variant v : variants) {
    for (int f = 0; f < 3; ++f) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& r : table.rows) {
        if (r.variant != v || r.samples == 0) continue;
        const double val = f == 0 ? r.err_vel_l2 : f == 1 ? r.err_h1_mid : r.err_press;
        if (val > 0.0 && std::isfinite(val)) pts.emplace_back(r.tau, val);
      }
      if (pts.size() < 3) continue;
      const RateFit fit = estimate_rate(pts);
      table.rates.push_back({v, names[f], fit.slope, fit.slope_stderr});
    }
  }
}

}  // namespace detail

/// Monte Carlo study: every path drives all step sizes and variants with one
/// lattice; reduction is in path order, so results do not depend on threads.
inline ErrorTable run_study(const StudyConfig& cfg, const Stepper& stepper = {}) {
  cfg.validate();
  const auto mc = make_case(cfg.case_name, cfg.case_params);
  const auto forcing = make_forcing(mc);
  const double delta = cfg.lattice_step();
  const std::size_t T = cfg.taus.size();
  const std::size_t V = cfg.variants.size();
  const std::size_t cells = T * V;

  struct CellResult {
    std::optional<PathErrors> errors;
    std::string failure;
  };
  std::vector<std::vector<CellResult>> results(cfg.samples, std::vector<CellResult>(cells));

  parallel_for(cfg.samples, cfg.threads, [&](std::size_t path) {
    const BrownianLattice lat = sample_lattice(path_seed(cfg.base_seed, path), delta, cfg.horizon, mc->noise.size());
    for (std::size_t ti = 0; ti < T; ++ti) {
      for (std::size_t vi = 0; vi < V; ++vi) {
        SchemeConfig sc;
        sc.variant = cfg.variants[vi];
        sc.nu = mc->nu;
        sc.tau = cfg.taus[ti];
        sc.fixed_point_tol = cfg.tol;
        sc.fixed_point_max_iters = cfg.max_iters;
        sc.dealias = cfg.dealias;
        sc.forcing = forcing;
        CellResult& cell = results[path][ti * V + vi];
        try {
          cell.errors = run_path(*mc, sc, lat, cfg.horizon, stepper);
        } catch (const SolverError& e) {
          cell.failure = e.what();
        }
      }
    }
  });

  ErrorTable table;
  for (std::size_t vi = 0; vi < V; ++vi) {
    for (std::size_t ti = 0; ti < T; ++ti) {
      std::vector<double> vel, h1, pr;
      ErrorRow row{cfg.variants[vi], cfg.taus[ti]};
      for (std::size_t path = 0; path < cfg.samples; ++path) {
        const CellResult& cell = results[path][ti * V + vi];
        if (!cell.errors) {
          ++row.failures;
          table.failures.push_back({path, row.variant, row.tau, cell.failure});
          continue;
        }
        vel.push_back(cell.errors->vel_max);
        h1.push_back(cell.errors->h1_mid);
        pr.push_back(cell.errors->press);
      }
      const MeanEstimate mv = mean_estimate(vel), mh = mean_estimate(h1), mp = mean_estimate(pr);
      row.err_vel_l2 = mv.mean;
      row.stderr_vel = mv.stderr_;
      row.err_h1_mid = mh.mean;
      row.stderr_h1 = mh.stderr_;
      row.err_press = mp.mean;
      row.stderr_press = mp.stderr_;
      row.samples = mv.count;
      table.rows.push_back(row);
    }
  }
  detail::fit_rates(table, cfg.variants);

  // soft check: halving tau should not raise the velocity error beyond noise
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const ErrorRow& a = table.rows[i - 1];
    const ErrorRow& b = table.rows[i];
    if (a.variant != b.variant) continue;
    if (b.err_vel_l2 > a.err_vel_l2 + 2.0 * (a.stderr_vel + b.stderr_vel)) {
      table.warnings.push_back(to_string(b.variant) + ": velocity error grows from tau=" + std::to_string(a.tau) +
                               " to tau=" + std::to_string(b.tau));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Quadrature and appendix-lemma checks

struct LadderPoint {
  double tau = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  double expected = std::numeric_limits<double>::quiet_NaN();
};

struct CheckReport {
  std::string name;
  std::vector<LadderPoint> points;
  std::optional<RateFit> fit;
  std::string criterion;  // human-readable pass condition
  bool passed = false;
};

struct CheckSettings {
  std::vector<double> taus = {0.125, 0.0625, 0.03125};
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  std::size_t refinement = 16;
  std::size_t threads = 1;
};

namespace detail {

// Sample-parallel Monte Carlo over single-interval lattices; f(lattice) returns
// one value per ladder entry.
template <class F>
std::vector<std::vector<double>> sample_ladder(const CheckSettings& s, double horizon, std::size_t modes, F&& f) {
  const double delta = s.taus.back() * s.taus.back() / static_cast<double>(s.refinement);
  std::vector<std::vector<double>> values(s.samples);
  parallel_for(s.samples, s.threads, [&](std::size_t i) {
    values[i] = f(sample_lattice(path_seed(s.seed, i), delta, horizon, modes));
  });
  return values;
}

inline std::vector<LadderPoint> ladder_means(const CheckSettings& s, const std::vector<std::vector<double>>& v) {
  std::vector<LadderPoint> pts;
  for (std::size_t t = 0; t < s.taus.size(); ++t) {
    std::vector<double> col;
    col.reserve(v.size());
    for (const auto& row : v) col.push_back(row[t]);
    const MeanEstimate m = mean_estimate(col);
    pts.push_back({s.taus[t], m.mean, m.stderr_});
  }
  return pts;
}

inline void require_sorted_ladder(const std::vector<double>& taus) {
  if (taus.empty()) throw ConfigError("check ladder is empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!is_dyadic_step(taus[i])) throw ConfigError("check ladder entries must be 2^-j with j >= 2");
    if (i > 0 && !(taus[i] < taus[i - 1])) throw ConfigError("check ladder must be strictly decreasing");
  }
}

}  // namespace detail

/// E|Q^W - I^W|^2 against tau^3/3, each within 5 standard errors.
inline CheckReport check_quadrature_IW(const CheckSettings& s) {
  detail::require_sorted_ladder(s.taus);
  auto values = detail::sample_ladder(s, s.taus.front(), 1, [&](const BrownianLattice& lat) {
    std::vector<double> out;
    for (double tau : s.taus) {
      const double d = oracle_QW(lat, 0, tau)[0] - quadrature_IW(lat, 0, tau)[0];
      out.push_back(d * d);
    }
    return out;
  });
  CheckReport r{"quadrature_IW", detail::ladder_means(s, values), std::nullopt,
                "mean square error within 5 standard errors of tau^3/3"};
  r.passed = true;
  for (auto& p : r.points) {
    p.expected = p.tau * p.tau * p.tau / 3.0;
    if (!(std::abs(p.value - p.expected) <= 5.0 * p.stderr_)) r.passed = false;
  }
  return r;
}

/// E||Q^{W2} - I^{W2}||^2_{L2} per tau and its fitted slope, expected in [2.7, 3.3].
inline CheckReport check_triple_integral(const NoiseModel& noise, const CheckSettings& s) {
  detail::require_sorted_ladder(s.taus);
  if (s.refinement < 16) throw LatticeError("triple-integral check needs a lattice at least 16x finer than tau^2");
  const std::size_t K = noise.size();
  const std::vector<double> gram = noise.outer_gram();
  const double a4 = std::pow(noise.amplitude(), 4);
  auto values = detail::sample_ladder(s, s.taus.front(), K, [&](const BrownianLattice& lat) {
    std::vector<double> out;
    for (double tau : s.taus) {
      std::vector<double> d = oracle_QW2_coefficients(lat, 0, tau);
      const std::vector<double> q = quadrature_IW2_coefficients(lat, 0, tau);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= q[i];
      double ms = 0.0;
      for (std::size_t a = 0; a < d.size(); ++a) {
        for (std::size_t b = 0; b < d.size(); ++b) ms += d[a] * d[b] * gram[a * d.size() + b];
      }
      out.push_back(a4 * ms);
    }
    return out;
  });
  CheckReport r{"triple_integral", detail::ladder_means(s, values), std::nullopt,
                "fitted mean-square slope in [2.7, 3.3]"};
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : r.points) pts.emplace_back(p.tau, p.value);
  if (pts.size() >= 3) {
    r.fit = estimate_rate(pts);
    r.passed = r.fit->slope >= 2.7 && r.fit->slope <= 3.3;
  }
  return r;
}

namespace detail {

// (1/tau) int_{t_n}^{t_{n+1}} y - (3/2 y(t_n) - 1/2 y(t_{n-1})), integral by composite Simpson.
template <class Y>
double peano_defect(Y&& y, double tau, std::size_t n, std::size_t panels = 64) {
  const double t0 = static_cast<double>(n) * tau;
  const double h = tau / static_cast<double>(panels);
  double s = y(t0) + y(t0 + tau);
  for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * y(t0 + static_cast<double>(i) * h);
  const double avg = s * h / 3.0 / tau;
  return avg - (1.5 * y(t0) - 0.5 * y(t0 - tau));
}

}  // namespace detail

/// Extrapolation defect on y = t^2 (exactly 5/6 tau^2 for every n >= 1) and
/// on constants (exactly 0).
inline CheckReport check_peano_smooth(const std::vector<double>& taus) {
  detail::require_sorted_ladder(taus);
  CheckReport r{"peano_smooth", {}, std::nullopt, "defect equals 5/6 tau^2 to 1e-12 (and 0 on constants)"};
  r.passed = true;
  for (double tau : taus) {
    double worst = 0.0;
    const std::size_t N = static_cast<std::size_t>(std::llround(1.0 / tau));
    for (std::size_t n = 1; n < N; ++n) {
      const double d = detail::peano_defect([](double t) { return t * t; }, tau, n);
      worst = std::max(worst, std::abs(d - 5.0 / 6.0 * tau * tau));
      const double c = detail::peano_defect([](double) { return 3.0; }, tau, n);
      worst = std::max(worst, std::abs(c));
    }
    LadderPoint p{tau, 5.0 / 6.0 * tau * tau + worst, 0.0, 5.0 / 6.0 * tau * tau};
    r.points.push_back(p);
    if (!(worst <= 1e-12)) r.passed = false;
  }
  return r;
}

/// Extrapolation defect on Brownian antiderivatives y(t) = int_0^t W: RMS over
/// paths of the defect on [tau, 2 tau], fitted slope in the norm at least 1.4.
inline CheckReport check_peano_brownian(const CheckSettings& s) {
  detail::require_sorted_ladder(s.taus);
  auto values = detail::sample_ladder(s, 2.0 * s.taus.front(), 1, [&](const BrownianLattice& lat) {
    // y on the lattice by the trapezoid rule
    const double d = lat.delta();
    std::vector<double> y(lat.points(), 0.0);
    for (std::size_t i = 1; i < lat.points(); ++i) y[i] = y[i - 1] + 0.5 * d * (lat.value(0, i - 1) + lat.value(0, i));
    std::vector<double> out;
    for (double tau : s.taus) {
      const std::size_t m = lat.stride(tau);
      double integral = 0.5 * (y[m] + y[2 * m]);
      for (std::size_t i = m + 1; i < 2 * m; ++i) integral += y[i];
      const double defect = integral * d / tau - (1.5 * y[m] - 0.5 * y[0]);
      out.push_back(defect * defect);
    }
    return out;
  });
  CheckReport r{"peano_brownian", detail::ladder_means(s, values), std::nullopt,
                "fitted slope of the RMS defect at least 1.4"};
  std::vector<std::pair<double, double>> pts;
  for (auto& p : r.points) {
    // report in the norm (RMS), propagate the standard error to first order
    const double rms = std::sqrt(p.value);
    p.stderr_ = rms > 0.0 ? 0.5 * p.stderr_ / rms : 0.0;
    p.value = rms;
    pts.emplace_back(p.tau, rms);
  }
  if (pts.size() >= 3) {
    r.fit = estimate_rate(pts);
    r.passed = r.fit->slope >= 1.4;
  }
  return r;
}

}  // namespace snsde
