#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snsde/config.hpp"
#include "snsde/harness.hpp"
#include "snsde/io.hpp"

namespace snsde {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_solver = 2, exit_check = 3 };

/// --output, then [output] directory, then $SNSDE_OUTPUT_DIR, then ./snsde-output.
inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& c) {
  if (flag && !flag->empty()) return *flag;
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv("SNSDE_OUTPUT_DIR"); env && *env) return env;
  return "snsde-output";
}

struct RunSummary {
  std::size_t steps = 0;
  double final_energy = 0.0;
  double max_divergence = 0.0;
  std::vector<double> energy;  // per node, t_0 included
};

/// One path with the first configured variant. Writes trajectory.csv and,
/// if requested, snapshots of the physical velocity.
inline RunSummary cmd_run(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const double steps_real = cfg.horizon / cfg.tau;
  if (std::abs(steps_real - std::round(steps_real)) > 1e-9 * steps_real) {
    throw ConfigError("T is not a whole number of steps of size tau");
  }
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  const auto mc = make_case(cfg.case_name, cfg.case_params);
  const BrownianLattice lat =
      sample_lattice(path_seed(cfg.base_seed, 0), cfg.tau * cfg.tau / static_cast<double>(cfg.lattice_refinement),
                     cfg.horizon, mc->noise.size());
  SchemeConfig sc;
  sc.variant = cfg.variants.front();
  sc.nu = mc->nu;
  sc.tau = cfg.tau;
  sc.fixed_point_tol = cfg.tol;
  sc.fixed_point_max_iters = cfg.max_iters;
  sc.dealias = cfg.dealias;
  sc.forcing = make_forcing(mc);

  const bool snapshots = cfg.formats.count("snapshot") || cfg.formats.count("snapshot_csv");
  auto snapshot = [&](const SpectralField& u, std::size_t n) {
    const PhysicalField f = transform_backward(u);
    const double t = static_cast<double>(n) * cfg.tau;
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%06zu", n);
    if (cfg.formats.count("snapshot")) write_atomic(out / (std::string(name) + ".snsf"), encode_snapshot(f, t));
    if (cfg.formats.count("snapshot_csv")) write_atomic(out / (std::string(name) + ".csv"), snapshot_csv(f, t));
  };

  std::ostringstream csv;
  csv << stamp_line("snsde trajectory " + to_string(sc.variant) + " case " + cfg.case_name);
  csv << "step,t,energy,max_divergence,iterations\n";
  RunSummary sum;
  SchemeState s = initial_state(eval_exact(*mc, 0.0).y);
  auto record = [&](std::size_t n) {
    const SpectralField u = physical_velocity(s, sc.variant, lat, mc->noise, sc.tau);
    const double l2 = l2_norm(u);
    const double e = 0.5 * l2 * l2;
    const double div = max_divergence(u);
    csv << n << ',' << fmt(static_cast<double>(n) * cfg.tau) << ',' << fmt(e) << ',' << fmt(div) << ','
        << (n == 0 ? 0 : s.iterations) << '\n';
    sum.energy.push_back(e);
    sum.max_divergence = std::max(sum.max_divergence, div);
    if (snapshots && (n == steps || (cfg.snapshot_every && n % cfg.snapshot_every == 0))) snapshot(u, n);
  };
  record(0);
  for (std::size_t n = 0; n < steps; ++n) {
    s = step(s, sc, lat, mc->noise, n);
    record(n + 1);
  }
  sum.steps = steps;
  sum.final_energy = sum.energy.back();
  if (cfg.formats.count("csv")) write_atomic(out / "trajectory.csv", csv.str());
  return sum;
}

/// Full study; writes errors.csv, rates.csv and plot.dat.
inline ErrorTable cmd_convergence(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const ErrorTable t = run_study(cfg.study());
  write_atomic(out / "errors.csv", errors_csv(t));
  write_atomic(out / "rates.csv", rates_csv(t));
  write_atomic(out / "plot.dat", plot_data(t));
  return t;
}

/// Quadrature and extrapolation checks on the configured ladder and sample count.
inline std::vector<CheckReport> cmd_check(const RunConfig& cfg, const std::filesystem::path& out) {
  validate(cfg);
  const auto mc = make_case(cfg.case_name, cfg.case_params);
  CheckSettings s;
  s.taus = cfg.tau_ladder;
  s.samples = cfg.samples;
  s.seed = cfg.base_seed;
  s.refinement = cfg.lattice_refinement;
  s.threads = cfg.threads;
  std::vector<CheckReport> reports;
  reports.push_back(check_quadrature_IW(s));
  reports.push_back(check_triple_integral(mc->noise, s));
  reports.push_back(check_peano_smooth(s.taus));
  reports.push_back(check_peano_brownian(s));

  std::ostringstream os;
  os << stamp_line("snsde checks");
  os << "check,tau,value,stderr,expected\n";
  for (const auto& r : reports) {
    for (const auto& p : r.points) {
      os << r.name << ',' << fmt(p.tau) << ',' << fmt(p.value) << ',' << fmt(p.stderr_) << ',' << fmt(p.expected)
         << '\n';
    }
  }
  std::ostringstream summary;
  summary << stamp_line("snsde check summary");
  for (const auto& r : reports) {
    summary << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.criterion;
    if (r.fit) summary << " (slope " << fmt(r.fit->slope) << " +- " << fmt(r.fit->slope_stderr) << ")";
    summary << '\n';
  }
  write_atomic(out / "checks.csv", os.str());
  write_atomic(out / "checks.txt", summary.str());
  return reports;
}

/// Command-line entry: run|convergence|check --config <path> [--output dir] [--threads n] [--seed s].
inline int cli_main(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Stochastic Navier-Stokes time stepping: runs, convergence studies, quadrature checks"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::vector<CLI::App*> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "one path of the first variant; trajectory.csv and snapshots"},
      {"convergence", "mean-square errors over the tau ladder; errors.csv, rates.csv, plot.dat"},
      {"check", "quadrature and extrapolation-defect checks; checks.csv, checks.txt"}};
  for (const auto& [name, what] : commands) {
    CLI::App* sub = app.add_subcommand(name, what);
    sub->add_option("--config", config_path, "experiment file")->required();
    sub->add_option("--output", output, "output directory");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "base seed, overrides the config");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    RunConfig cfg = load_run_config(config_path);
    if (threads) cfg.threads = *threads;
    if (seed) cfg.base_seed = *seed;
    const std::filesystem::path out = resolve_output_dir(output, cfg);
    if (subs[0]->parsed()) {
      cmd_run(cfg, out);
    } else if (subs[1]->parsed()) {
      const ErrorTable t = cmd_convergence(cfg, out);
      for (const auto& w : t.warnings) err << "warning: " << w << '\n';
      if (!t.failures.empty()) {
        for (const auto& f : t.failures) {
          err << "solver failure: " << to_string(f.variant) << " tau=" << f.tau << " path " << f.path << ": "
              << f.message << '\n';
        }
        return exit_solver;
      }
    } else {
      bool ok = true;
      for (const auto& r : cmd_check(cfg, out)) {
        err << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
        ok = ok && r.passed;
      }
      if (!ok) return exit_check;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << " (iterations " << e.iterations() << ", residual " << e.residual()
        << ")\n";
    return exit_solver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
  return exit_ok;
}

}  // namespace snsde
