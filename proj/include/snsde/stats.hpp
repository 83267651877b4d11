#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "snsde/error.hpp"

namespace snsde {

/// Sample mean with its standard error.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

inline MeanEstimate mean_estimate(std::span<const double> xs) {
  MeanEstimate m;
  m.count = xs.size();
  if (xs.empty()) return m;
  double s = 0.0;
  for (double x : xs) s += x;
  m.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - m.mean) * (x - m.mean);
    v /= static_cast<double>(xs.size() - 1);
    m.stderr_ = std::sqrt(v / static_cast<double>(xs.size()));
  }
  return m;
}

/// Least-squares line through (log tau, log error).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

inline RateFit estimate_rate(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw DomainError("rate fit needs at least 3 points");
  std::vector<double> x, y;
  for (const auto& [tau, err] : pairs) {
    if (!(tau > 0.0) || !(err > 0.0) || !std::isfinite(err)) {
      throw DomainError("rate fit needs positive step sizes and errors");
    }
    x.push_back(std::log(tau));
    y.push_back(std::log(err));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("rate fit needs distinct step sizes");
  RateFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    rss += r * r;
  }
  fit.slope_stderr = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

inline RateFit estimate_rate(const std::vector<std::pair<double, double>>& pairs) {
  return estimate_rate(std::span<const std::pair<double, double>>(pairs));
}

}  // namespace snsde
