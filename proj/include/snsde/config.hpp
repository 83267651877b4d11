#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/harness.hpp"
#include "snsde/manufactured.hpp"
#include "snsde/schemes.hpp"

namespace snsde {

/// One experiment, read from an INI file:
///
///   [problem] case, nu, T, grid
///   [noise]   K, amplitude, modes (';'-separated), solenoidal (comma list)
///   [time]    tau, tau_ladder (comma list, "1/8" allowed), lattice_refinement
///   [scheme]  variant or variants (comma list), tol, max_iters, dealias
///   [study]   samples, base_seed, threads
///   [output]  directory, formats (csv, snapshot, snapshot_csv), snapshot_every
struct RunConfig {
  std::string case_name = "taylor-green-mixed";
  CaseParams case_params;
  double horizon = 0.5;
  std::optional<std::size_t> noise_modes_expected;  // [noise] K
  double tau = 0.125;
  std::vector<double> tau_ladder = {0.125, 0.0625, 0.03125, 0.015625};
  std::size_t lattice_refinement = 16;
  std::vector<Variant> variants = {Variant::CN_RPDE};
  double tol = 1e-10;
  std::size_t max_iters = 100;
  bool dealias = true;
  std::size_t samples = 128;
  std::uint64_t base_seed = 1;
  std::size_t threads = 1;
  std::string output_dir;  // empty: use the environment or the default
  std::set<std::string> formats = {"csv"};
  std::size_t snapshot_every = 0;  // 0: final state only

  StudyConfig study() const {
    StudyConfig s;
    s.case_name = case_name;
    s.case_params = case_params;
    s.horizon = horizon;
    s.variants = variants;
    s.taus = tau_ladder;
    s.samples = samples;
    s.base_seed = base_seed;
    s.refinement = lattice_refinement;
    s.tol = tol;
    s.max_iters = max_iters;
    s.dealias = dealias;
    s.threads = threads;
    return s;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  try {
    std::size_t used = 0;
    if (const auto slash = s.find('/'); slash != std::string::npos) {
      const double a = std::stod(s.substr(0, slash), &used);
      if (used != slash) throw ConfigError("");
      const std::string rest = s.substr(slash + 1);
      const double b = std::stod(rest, &used);
      if (used != rest.size() || b == 0.0) throw ConfigError("");
      return a / b;
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
}

inline std::uint64_t parse_count(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': integer out of range");
  }
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + text + "'");
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }

  static const std::map<std::string, std::set<std::string>> schema = {
      {"problem", {"case", "nu", "T", "grid"}},
      {"noise", {"K", "amplitude", "modes", "solenoidal"}},
      {"time", {"tau", "tau_ladder", "lattice_refinement"}},
      {"scheme", {"variant", "variants", "tol", "max_iters", "dealias"}},
      {"study", {"samples", "base_seed", "threads"}},
      {"output", {"directory", "formats", "snapshot_every"}},
  };
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }

  RunConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return detail::trim(*v);
    return std::nullopt;
  };

  if (auto v = get("problem.case")) c.case_name = *v;
  if (auto v = get("problem.nu")) c.case_params.nu = detail::parse_real("nu", *v);
  if (auto v = get("problem.T")) c.horizon = detail::parse_real("T", *v);
  if (auto v = get("problem.grid")) c.case_params.grid = detail::parse_count("grid", *v);

  if (auto v = get("noise.K")) c.noise_modes_expected = detail::parse_count("K", *v);
  if (auto v = get("noise.amplitude")) c.case_params.amplitude = detail::parse_real("amplitude", *v);
  if (auto v = get("noise.modes")) c.case_params.noise_modes = *v;
  if (auto v = get("noise.solenoidal")) {
    for (const auto& s : detail::split_list(*v)) c.case_params.solenoidal.push_back(detail::parse_bool("solenoidal", s));
  }

  if (auto v = get("time.tau")) c.tau = detail::parse_real("tau", *v);
  if (auto v = get("time.tau_ladder")) {
    c.tau_ladder.clear();
    for (const auto& s : detail::split_list(*v)) c.tau_ladder.push_back(detail::parse_real("tau_ladder", s));
  }
  if (auto v = get("time.lattice_refinement")) c.lattice_refinement = detail::parse_count("lattice_refinement", *v);

  if (get("scheme.variant") && get("scheme.variants")) throw ConfigError("give either variant or variants, not both");
  if (auto v = get("scheme.variant")) c.variants = {parse_variant(*v)};
  if (auto v = get("scheme.variants")) {
    c.variants.clear();
    for (const auto& s : detail::split_list(*v)) c.variants.push_back(parse_variant(s));
  }
  if (auto v = get("scheme.tol")) c.tol = detail::parse_real("tol", *v);
  if (auto v = get("scheme.max_iters")) c.max_iters = detail::parse_count("max_iters", *v);
  if (auto v = get("scheme.dealias")) c.dealias = detail::parse_bool("dealias", *v);

  if (auto v = get("study.samples")) c.samples = detail::parse_count("samples", *v);
  if (auto v = get("study.base_seed")) c.base_seed = detail::parse_count("base_seed", *v);
  if (auto v = get("study.threads")) c.threads = detail::parse_count("threads", *v);

  if (auto v = get("output.directory")) c.output_dir = *v;
  if (auto v = get("output.formats")) {
    c.formats.clear();
    for (const auto& s : detail::split_list(*v)) {
      if (s != "csv" && s != "snapshot" && s != "snapshot_csv") throw ConfigError("unknown output format '" + s + "'");
      c.formats.insert(s);
    }
  }
  if (auto v = get("output.snapshot_every")) c.snapshot_every = detail::parse_count("snapshot_every", *v);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_run_config(in);
}

/// Checks that need no computation beyond building the case.
inline void validate(const RunConfig& c) {
  if (!(c.horizon > 0.0)) throw ConfigError("T must be positive");
  if (!(c.case_params.nu > 0.0)) throw ConfigError("nu must be positive");
  if (c.case_params.grid < 4 || c.case_params.grid % 2) throw ConfigError("grid must be even and at least 4");
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (!is_dyadic_step(c.tau)) throw ConfigError("tau must be 2^-j with j >= 2");
  std::shared_ptr<const ManufacturedCase> mc;
  try {
    mc = make_case(c.case_name, c.case_params);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.noise_modes_expected && *c.noise_modes_expected != mc->noise.size()) {
    throw ConfigError("[noise] K = " + std::to_string(*c.noise_modes_expected) + " but the mode list has " +
                      std::to_string(mc->noise.size()) + " entries");
  }
  c.study().validate();
}

}  // namespace snsde
