#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/harness.hpp"

namespace snsde {

class IoError : public Error {
public:
  using Error::Error;
};

/// Write through a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

/// "# <what> generated <UTC time>"; the only line that differs between reruns.
inline std::string stamp_line(const std::string& what) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return "# " + what + " generated " + buf + "\n";
}

/// Shortest round-trip decimal form.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string errors_csv(const ErrorTable& t) {
  std::ostringstream os;
  os << stamp_line("snsde error table (mean-square errors)");
  os << "variant,tau,err_vel_l2,stderr_vel,err_h1_mid,stderr_h1,err_press,stderr_press,samples,failures\n";
  for (const auto& r : t.rows) {
    os << to_string(r.variant) << ',' << fmt(r.tau) << ',' << fmt(r.err_vel_l2) << ',' << fmt(r.stderr_vel) << ','
       << fmt(r.err_h1_mid) << ',' << fmt(r.stderr_h1) << ',' << fmt(r.err_press) << ',' << fmt(r.stderr_press)
       << ',' << r.samples << ',' << r.failures << '\n';
  }
  return os.str();
}

inline std::string rates_csv(const ErrorTable& t) {
  std::ostringstream os;
  os << stamp_line("snsde fitted slopes of log(mean-square error) against log(tau)");
  os << "variant,functional,slope,slope_stderr\n";
  for (const auto& r : t.rates) {
    os << to_string(r.variant) << ',' << r.functional << ',' << fmt(r.slope) << ',' << fmt(r.slope_stderr) << '\n';
  }
  return os.str();
}

/// Whitespace-separated blocks, one per variant, for gnuplot-style tools.
inline std::string plot_data(const ErrorTable& t) {
  std::ostringstream os;
  os << stamp_line("snsde plot data");
  os << "# columns: log10_tau log10_err_vel_l2 log10_err_h1_mid log10_err_press\n";
  std::string current;
  for (const auto& r : t.rows) {
    const std::string v = to_string(r.variant);
    if (v != current) {
      if (!current.empty()) os << "\n\n";
      os << "# variant " << v << '\n';
      current = v;
    }
    auto lg = [](double x) { return x > 0.0 ? fmt(std::log10(x)) : std::string("nan"); };
    os << lg(r.tau) << ' ' << lg(r.err_vel_l2) << ' ' << lg(r.err_h1_mid) << ' ' << lg(r.err_press) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Snapshots: "SNSF", u8 version, u32 grid, u32 components, f64 time, then
// components x grid x grid f64 values (row index x1), all little endian.

inline constexpr char snapshot_magic[4] = {'S', 'N', 'S', 'F'};
inline constexpr std::uint8_t snapshot_version = 1;

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("snapshot truncated");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline std::string encode_snapshot(const PhysicalField& f, double time) {
  std::string out(snapshot_magic, 4);
  detail::put_le<std::uint8_t>(out, snapshot_version);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid.n()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.components()));
  detail::put_le<double>(out, time);
  for (double v : f.values) detail::put_le<double>(out, v);
  return out;
}

struct Snapshot {
  PhysicalField field;
  double time = 0.0;
};

inline Snapshot decode_snapshot(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, std::string(snapshot_magic, 4)) != 0) throw IoError("not a snapshot");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint8_t>(bytes, pos);
  if (version != snapshot_version) throw IoError("unsupported snapshot version " + std::to_string(version));
  const auto n = detail::get_le<std::uint32_t>(bytes, pos);
  const auto comps = detail::get_le<std::uint32_t>(bytes, pos);
  Rank rank;
  switch (comps) {
    case 1: rank = Rank::scalar; break;
    case 2: rank = Rank::vector; break;
    case 4: rank = Rank::matrix; break;
    default: throw IoError("bad component count " + std::to_string(comps));
  }
  Snapshot s{PhysicalField(Grid2D(n), rank), detail::get_le<double>(bytes, pos)};
  for (double& v : s.field.values) v = detail::get_le<double>(bytes, pos);
  if (pos != bytes.size()) throw IoError("trailing bytes after snapshot");
  return s;
}

/// x1,x2,c0[,c1...] per grid point.
inline std::string snapshot_csv(const PhysicalField& f, double time) {
  std::ostringstream os;
  os << "# snapshot t=" << fmt(time) << '\n' << "x1,x2";
  for (int c = 0; c < f.components(); ++c) os << ",c" << c;
  os << '\n';
  const std::size_t n = f.grid.n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      os << fmt(static_cast<double>(i) / n) << ',' << fmt(static_cast<double>(j) / n);
      for (int c = 0; c < f.components(); ++c) os << ',' << fmt(f.at(c, i, j));
      os << '\n';
    }
  }
  return os.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace snsde
