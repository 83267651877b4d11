#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "snsde/error.hpp"

namespace snsde {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Realization of K independent Wiener processes on the uniform lattice
/// t_i = i * delta, i = 0..steps, with W_k(0) = 0.
///
/// One lattice is generated per study at the finest step any scheme needs;
/// coarser time steps read it at strided indices, so every step size sees the
/// same driving path.
class BrownianLattice {
public:
  BrownianLattice() = default;

  std::uint64_t seed() const noexcept { return seed_; }
  double delta() const noexcept { return delta_; }
  double horizon() const noexcept { return horizon_; }
  std::size_t modes() const noexcept { return modes_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t points() const noexcept { return steps_ + 1; }

  /// W_k(i * delta)
  double value(std::size_t k, std::size_t i) const { return cumulative_[k * points() + i]; }
  double increment(std::size_t k, std::size_t i) const { return increments_[k * steps_ + i]; }

  const std::vector<double>& increments() const noexcept { return increments_; }

  /// Number of lattice steps spanned by `duration`; throws when it is not a
  /// whole multiple of delta.
  std::size_t stride(double duration) const {
    const double r = duration / delta_;
    const double s = std::round(r);
    if (s < 1.0 || std::abs(r - s) > 1e-9 * s) {
      throw LatticeError("duration " + std::to_string(duration) + " is not a multiple of the lattice step " +
                         std::to_string(delta_));
    }
    return static_cast<std::size_t>(s);
  }

  /// Lattice index of time t; throws for off-lattice or out-of-range times.
  std::size_t index_of(double t) const {
    if (t == 0.0) return 0;
    const std::size_t i = stride(t);
    if (i > steps_) throw LatticeError("time " + std::to_string(t) + " beyond lattice horizon");
    return i;
  }

  /// Build a lattice from given path values (rows: modes, columns: lattice
  /// points). Used for deterministic paths in tests.
  static BrownianLattice from_values(double delta, const std::vector<std::vector<double>>& paths) {
    if (!(delta > 0.0)) throw DomainError("lattice step must be positive");
    if (paths.empty() || paths.front().size() < 2) throw DomainError("need at least one mode and two points");
    BrownianLattice lat;
    lat.delta_ = delta;
    lat.modes_ = paths.size();
    lat.steps_ = paths.front().size() - 1;
    lat.horizon_ = delta * static_cast<double>(lat.steps_);
    lat.cumulative_.reserve(lat.modes_ * lat.points());
    lat.increments_.reserve(lat.modes_ * lat.steps_);
    for (const auto& p : paths) {
      if (p.size() != lat.points()) throw DomainError("all paths must have the same length");
      lat.cumulative_.insert(lat.cumulative_.end(), p.begin(), p.end());
      for (std::size_t i = 0; i < lat.steps_; ++i) lat.increments_.push_back(p[i + 1] - p[i]);
    }
    return lat;
  }

  static BrownianLattice from_increments(std::uint64_t seed, double delta, double horizon, std::size_t modes,
                                         std::vector<double> increments) {
    BrownianLattice lat;
    lat.seed_ = seed;
    lat.delta_ = delta;
    lat.horizon_ = horizon;
    lat.modes_ = modes;
    lat.steps_ = static_cast<std::size_t>(std::llround(horizon / delta));
    if (increments.size() != modes * lat.steps_) throw DomainError("increment count does not match lattice");
    lat.increments_ = std::move(increments);
    lat.rebuild_cumulative();
    return lat;
  }

private:
  void rebuild_cumulative() {
    cumulative_.assign(modes_ * points(), 0.0);
    for (std::size_t k = 0; k < modes_; ++k) {
      double w = 0.0;
      double* row = cumulative_.data() + k * points();
      const double* inc = increments_.data() + k * steps_;
      for (std::size_t i = 0; i < steps_; ++i) {
        w += inc[i];
        row[i + 1] = w;
      }
    }
  }

  std::uint64_t seed_ = 0;
  double delta_ = 0.0;
  double horizon_ = 0.0;
  std::size_t modes_ = 0;
  std::size_t steps_ = 0;
  std::vector<double> increments_;
  std::vector<double> cumulative_;
};

/// Seeded i.i.d. N(0, delta) increments; each mode draws from its own stream.
inline BrownianLattice sample_lattice(std::uint64_t seed, double delta, double horizon, std::size_t modes) {
  if (!(delta > 0.0) || !(horizon > 0.0)) throw DomainError("sample_lattice: delta and horizon must be positive");
  if (modes < 1) throw DomainError("sample_lattice: need at least one mode");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / delta));
  if (steps < 1) throw DomainError("sample_lattice: horizon shorter than one lattice step");
  std::vector<double> inc(modes * steps);
  const double sd = std::sqrt(delta);
  for (std::size_t k = 0; k < modes; ++k) {
    std::mt19937_64 gen(mix_seed(seed ^ mix_seed(0x5eedULL + k)));
    std::normal_distribution<double> normal(0.0, sd);
    for (std::size_t i = 0; i < steps; ++i) inc[k * steps + i] = normal(gen);
  }
  return BrownianLattice::from_increments(seed, delta, horizon, modes, std::move(inc));
}

// ---------------------------------------------------------------------------
// Binary dump: "SNBL" | version u8 | seed u64 | delta f64 | horizon f64 |
// modes u64 | steps u64 | increments f64[modes*steps], all little-endian,
// increments mode-major.

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw Error("unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr char lattice_magic[4] = {'S', 'N', 'B', 'L'};
inline constexpr std::uint8_t lattice_format_version = 1;

inline void dump_lattice(const BrownianLattice& lat, std::ostream& os) {
  os.write(lattice_magic, 4);
  detail::put_le<std::uint8_t>(os, lattice_format_version);
  detail::put_le<std::uint64_t>(os, lat.seed());
  detail::put_le<double>(os, lat.delta());
  detail::put_le<double>(os, lat.horizon());
  detail::put_le<std::uint64_t>(os, lat.modes());
  detail::put_le<std::uint64_t>(os, lat.steps());
  for (double v : lat.increments()) detail::put_le<double>(os, v);
}

inline BrownianLattice load_lattice(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, lattice_magic, 4) != 0) throw Error("not a lattice dump (bad magic)");
  const auto version = detail::get_le<std::uint8_t>(is);
  if (version != lattice_format_version) throw Error("unsupported lattice dump version " + std::to_string(version));
  const auto seed = detail::get_le<std::uint64_t>(is);
  const auto delta = detail::get_le<double>(is);
  const auto horizon = detail::get_le<double>(is);
  const auto modes = detail::get_le<std::uint64_t>(is);
  const auto steps = detail::get_le<std::uint64_t>(is);
  std::vector<double> inc(modes * steps);
  for (auto& v : inc) v = detail::get_le<double>(is);
  auto lat = BrownianLattice::from_increments(seed, delta, horizon, modes, std::move(inc));
  if (lat.steps() != steps) throw Error("lattice dump header is inconsistent");
  return lat;
}

}  // namespace snsde
