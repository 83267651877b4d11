#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snsde/error.hpp"
#include "snsde/field.hpp"
#include "snsde/operators.hpp"

namespace snsde {

// ---------------------------------------------------------------------------
// Closed-form mode fields

/// Taylor-Green type cell with wavenumbers (a, b), shifted by (s1, s2):
/// u = (b cos(2 pi a X1) sin(2 pi b X2), -a sin(2 pi a X1) cos(2 pi b X2)),
/// X = x - s. (1,1) is the classical vortex; the field is divergence free.
inline SpectralField taylor_green(Grid2D g, int a = 1, int b = 1, double s1 = 0.0, double s2 = 0.0) {
  return spectral_from(g, Rank::vector, [=](int c, double x1, double x2) {
    const double p = two_pi * a * (x1 - s1);
    const double q = two_pi * b * (x2 - s2);
    return c == 0 ? b * std::cos(p) * std::sin(q) : -a * std::sin(p) * std::cos(q);
  });
}

/// Pure gradient mode grad[cos(2 pi (a x1 + b x2))] / (2 pi) = -(a, b) sin(2 pi (a x1 + b x2)).
inline SpectralField gradient_mode(Grid2D g, int a, int b) {
  return spectral_from(g, Rank::vector, [=](int c, double x1, double x2) {
    const double s = std::sin(two_pi * (a * x1 + b * x2));
    return c == 0 ? -a * s : -b * s;
  });
}

/// Parse a mode expression such as "tg(1,1)", "tg(1,2,0.25,0)",
/// "grad(1,0)" or a sum with optional coefficients "tg(1,1)+0.5*tg(1,2)".
inline SpectralField parse_mode(Grid2D g, std::string_view text) {
  auto fail = [&](const std::string& why) -> SpectralField {
    throw ConfigError("bad mode expression '" + std::string(text) + "': " + why);
  };
  SpectralField total(g, Rank::vector);
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  }
  if (s.empty()) return fail("empty");
  std::size_t pos = 0;
  while (pos < s.size()) {
    // '+' inside parentheses does not split terms
    std::size_t depth = 0;
    std::size_t end = pos;
    for (; end < s.size(); ++end) {
      if (s[end] == '(') ++depth;
      if (s[end] == ')') --depth;
      if (s[end] == '+' && depth == 0 && end > pos) break;
    }
    std::string term = s.substr(pos, end - pos);
    pos = end + 1;
    double coeff = 1.0;
    if (auto star = term.find('*'); star != std::string::npos) {
      try {
        coeff = std::stod(term.substr(0, star));
      } catch (const std::exception&) {
        return fail("bad coefficient");
      }
      term = term.substr(star + 1);
    }
    const auto open = term.find('(');
    if (open == std::string::npos || term.back() != ')') return fail("expected name(args)");
    const std::string name = term.substr(0, open);
    std::vector<double> args;
    std::string inner = term.substr(open + 1, term.size() - open - 2);
    std::size_t p = 0;
    while (p <= inner.size()) {
      const auto comma = inner.find(',', p);
      const std::string tok = inner.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
      try {
        args.push_back(std::stod(tok));
      } catch (const std::exception&) {
        return fail("bad argument '" + tok + "'");
      }
      if (comma == std::string::npos) break;
      p = comma + 1;
    }
    auto as_int = [&](double v) {
      if (v != std::round(v)) fail("wavenumbers must be integers");
      return static_cast<int>(v);
    };
    if (name == "tg") {
      if (args.size() != 2 && args.size() != 4) return fail("tg takes 2 or 4 arguments");
      const double s1 = args.size() == 4 ? args[2] : 0.0;
      const double s2 = args.size() == 4 ? args[3] : 0.0;
      total.axpy(coeff, taylor_green(g, as_int(args[0]), as_int(args[1]), s1, s2));
    } else if (name == "grad") {
      if (args.size() != 2) return fail("grad takes 2 arguments");
      total.axpy(coeff, gradient_mode(g, as_int(args[0]), as_int(args[1])));
    } else {
      return fail("unknown mode '" + name + "'");
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

/// Solenoidal and gradient parts of each noise mode: phi_k = psi_k + grad theta_k.
struct NoiseSplit {
  std::vector<SpectralField> psi;
  std::vector<SpectralField> theta;
};

inline NoiseSplit helmholtz_split(std::span<const SpectralField> modes) {
  NoiseSplit split;
  for (const auto& phi : modes) {
    split.psi.push_back(leray_project(phi));
    split.theta.push_back(scalar_potential(phi));
  }
  return split;
}

/// Finite-mode additive noise Phi W = amplitude * sum_k W_k phi_k.
///
/// Immutable after construction; the Helmholtz split, physical samples of the
/// transported (solenoidal) modes and their pairwise outer products are
/// precomputed so that steppers on several threads can share one model.
class NoiseModel {
public:
  NoiseModel(std::vector<SpectralField> modes, double amplitude, std::vector<bool> solenoidal)
  {
    auto data = std::make_shared<Data>();
    if (modes.empty()) throw DomainError("noise model needs at least one mode");
    if (solenoidal.size() != modes.size()) throw DomainError("one solenoidal flag per mode expected");
    if (!std::isfinite(amplitude)) throw DomainError("noise amplitude must be finite");
    for (std::size_t k = 0; k < modes.size(); ++k) {
      SpectralField::require_rank(modes[k], Rank::vector, "NoiseModel");
      if (!(modes[k].grid() == modes.front().grid())) throw ShapeError("noise modes live on different grids");
      if (solenoidal[k]) {
        const Norms nk = norms(modes[k]);
        if (max_divergence(modes[k]) > 1e-12 * std::max(1.0, nk.h1_semi)) {
          throw DomainError("noise mode " + std::to_string(k) + " is tagged solenoidal but has divergence");
        }
      }
    }
    data->modes = std::move(modes);
    data->amplitude = amplitude;
    data->solenoidal = std::move(solenoidal);
    data->split = helmholtz_split(data->modes);
    const std::size_t K = data->modes.size();
    data->outer.resize(K * K);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) {
        data->outer[k * K + j] = outer(data->split.psi[k], data->split.psi[j], false);
      }
    }
    data_ = std::move(data);
  }

  /// All-solenoidal convenience constructor.
  NoiseModel(std::vector<SpectralField> modes, double amplitude)
      : NoiseModel(modes, amplitude, std::vector<bool>(modes.size(), true)) {}

  /// Noise switched off (one zero mode, zero amplitude).
  static NoiseModel none(Grid2D g) { return NoiseModel({SpectralField(g, Rank::vector)}, 0.0); }

  std::size_t size() const noexcept { return data_->modes.size(); }
  double amplitude() const noexcept { return data_->amplitude; }
  const Grid2D& grid() const noexcept { return data_->modes.front().grid(); }
  const SpectralField& mode(std::size_t k) const { return data_->modes.at(k); }
  bool solenoidal(std::size_t k) const { return data_->solenoidal.at(k); }
  bool all_solenoidal() const noexcept {
    for (bool s : data_->solenoidal) {
      if (!s) return false;
    }
    return true;
  }
  bool is_off() const noexcept { return data_->amplitude == 0.0; }
  const NoiseSplit& split() const noexcept { return data_->split; }

  /// amplitude * sum_k c_k psi_k (the part carried by the random transform).
  SpectralField transported(std::span<const double> coeffs) const {
    return combine(data_->split.psi, coeffs);
  }
  /// amplitude * sum_k c_k phi_k (the full noise coefficient).
  SpectralField full(std::span<const double> coeffs) const { return combine(data_->modes, coeffs); }
  /// amplitude * sum_k c_k theta_k
  SpectralField potential(std::span<const double> coeffs) const { return combine(data_->split.theta, coeffs); }

  /// amplitude^2 * sum_{k,j} C_kj psi_k (x) psi_j for a K x K row-major matrix C.
  SpectralField outer_combination(std::span<const double> matrix) const {
    const std::size_t K = size();
    if (matrix.size() != K * K) throw ShapeError("outer_combination: expected K*K coefficients");
    SpectralField out(grid(), Rank::matrix);
    const double a2 = data_->amplitude * data_->amplitude;
    for (std::size_t i = 0; i < K * K; ++i) {
      if (matrix[i] != 0.0) out.axpy(a2 * matrix[i], data_->outer[i]);
    }
    return out;
  }

  /// L2 inner products <psi_k (x) psi_j, psi_l (x) psi_m>, indexed [(k*K+j)*K*K + l*K+m].
  std::vector<double> outer_gram() const {
    const std::size_t K2 = size() * size();
    std::vector<double> gram(K2 * K2);
    for (std::size_t a = 0; a < K2; ++a) {
      for (std::size_t b = 0; b < K2; ++b) gram[a * K2 + b] = inner_product(data_->outer[a], data_->outer[b]);
    }
    return gram;
  }

private:
  SpectralField combine(const std::vector<SpectralField>& basis, std::span<const double> coeffs) const {
    if (coeffs.size() != size()) throw ShapeError("noise coefficient count does not match mode count");
    SpectralField out(grid(), basis.front().rank());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (coeffs[k] != 0.0) out.axpy(data_->amplitude * coeffs[k], basis[k]);
    }
    return out;
  }

  struct Data {
    std::vector<SpectralField> modes;
    double amplitude = 0.0;
    std::vector<bool> solenoidal;
    NoiseSplit split;
    std::vector<SpectralField> outer;
  };
  std::shared_ptr<const Data> data_;
};

}  // namespace snsde
