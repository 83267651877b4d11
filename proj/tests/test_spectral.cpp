#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "snsde/field.hpp"
#include "snsde/grid.hpp"
#include "snsde/noise.hpp"
#include "snsde/operators.hpp"

using namespace snsde;

namespace {

constexpr double pi = 3.14159265358979323846;

PhysicalField random_physical(Grid2D g, Rank r, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PhysicalField f(g, r);
  for (double& v : f.values) v = u(gen);
  return f;
}

// Smooth random field: a handful of low modes with random phases.
SpectralField smooth_random(Grid2D g, Rank r, unsigned seed, int kmax = 4) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::array<double, 5>> terms;  // comp, a, b, amp, phase
  for (int c = 0; c < component_count(r); ++c) {
    for (int t = 0; t < 6; ++t) {
      terms.push_back({double(c), std::round(u(gen) * kmax), std::round(u(gen) * kmax), u(gen), pi * u(gen)});
    }
  }
  return spectral_from(g, r, [&](int c, double x1, double x2) {
    double s = 0.0;
    for (const auto& t : terms) {
      if (int(t[0]) == c) s += t[3] * std::cos(2 * pi * (t[1] * x1 + t[2] * x2) + t[4]);
    }
    return s;
  });
}

double max_abs_diff(const PhysicalField& a, const PhysicalField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST(Grid, RejectsOddOrSmall) {
  EXPECT_THROW(Grid2D(5), DomainError);
  EXPECT_THROW(Grid2D(2), DomainError);
  EXPECT_NO_THROW(Grid2D(4));
}

TEST(Grid, DealiasCutoff) {
  Grid2D g(32);
  EXPECT_TRUE(g.keeps_dealiased(10, 0));
  EXPECT_FALSE(g.keeps_dealiased(11, 0));
  EXPECT_FALSE(g.keeps_dealiased(0, 11));
  EXPECT_TRUE(g.keeps_dealiased(32 - 10, 10));
}

TEST(Transform, ConstantIsDcMode) {
  Grid2D g(16);
  SpectralField f = spectral_from(g, Rank::scalar, [](int, double, double) { return 1.0; });
  for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
    for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
      const double expect = (i1 == 0 && j2 == 0) ? 1.0 : 0.0;
      EXPECT_NEAR(std::abs(f.at(0, i1, j2) - Complex{expect}), 0.0, 1e-14);
    }
  }
}

TEST(Transform, SingleCosine) {
  Grid2D g(16);
  SpectralField f = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  EXPECT_NEAR(std::abs(f.at(0, 1, 0) - Complex{0.5}), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(f.at(0, 15, 0) - Complex{0.5}), 0.0, 1e-14);
  double rest = 0.0;
  for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
    for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
      if ((i1 == 1 || i1 == 15) && j2 == 0) continue;
      rest = std::max(rest, std::abs(f.at(0, i1, j2)));
    }
  }
  EXPECT_LT(rest, 1e-14);
}

TEST(Transform, RoundTripAllSizes) {
  for (std::size_t n : {16u, 32u, 64u}) {
    Grid2D g(n);
    for (Rank r : {Rank::scalar, Rank::vector, Rank::matrix}) {
      PhysicalField v = random_physical(g, r, 7 + unsigned(n));
      PhysicalField back = transform_backward(transform_forward(v));
      EXPECT_LT(max_abs_diff(v, back), 1e-12 * v.max_abs()) << "n=" << n;
    }
  }
}

TEST(Transform, HermitianSymmetry) {
  Grid2D g(32);
  SpectralField f = transform_forward(random_physical(g, Rank::vector, 3));
  EXPECT_LT(f.hermitian_defect(), 1e-14);
}

TEST(Transform, SizeMismatchThrows) {
  PhysicalField p(Grid2D(16), Rank::scalar);
  p.values.resize(10);
  EXPECT_THROW(transform_forward(p), ShapeError);
}

TEST(Norms, CosineParseval) {
  Grid2D g(16);
  SpectralField f = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  const Norms nf = norms(f);
  EXPECT_NEAR(nf.l2, std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(nf.h1_semi, 2 * pi * std::sqrt(0.5), 1e-12);
  EXPECT_EQ(l2_norm(SpectralField(g, Rank::scalar)), 0.0);
}

TEST(Norms, MatchesPhysicalQuadrature) {
  Grid2D g(32);
  PhysicalField p = random_physical(g, Rank::vector, 11);
  double s = 0.0;
  for (double v : p.values) s += v * v;
  s /= double(g.physical_size());
  EXPECT_NEAR(l2_norm(transform_forward(p)), std::sqrt(s), 1e-12);
}

TEST(Laplacian, Eigenfunctions) {
  Grid2D g(32);
  SpectralField f = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  EXPECT_LT(l2_norm(laplacian(f) + f * (4 * pi * pi)), 1e-11);
  SpectralField h = spectral_from(g, Rank::scalar,
                                  [](int, double x1, double x2) { return std::sin(2 * pi * x1) * std::cos(4 * pi * x2); });
  EXPECT_LT(l2_norm(laplacian(h) + h * (20 * pi * pi)), 1e-10);
  SpectralField c = spectral_from(g, Rank::scalar, [](int, double, double) { return 3.0; });
  EXPECT_LT(l2_norm(laplacian(c)), 1e-14);
  EXPECT_THROW(laplacian(SpectralField(g, Rank::matrix)), ShapeError);
}

TEST(Laplacian, InverseOnMeanZero) {
  Grid2D g(32);
  SpectralField f = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  EXPECT_LT(l2_norm(inv_laplacian_meanzero(f) + f * (1.0 / (4 * pi * pi))), 1e-15);
  SpectralField r = strip_nyquist(transform_forward(random_physical(g, Rank::scalar, 5)));
  r.at(0, 0, 0) = 0.0;
  EXPECT_LT(l2_norm(laplacian(inv_laplacian_meanzero(r)) - r), 1e-12 * l2_norm(r));
  EXPECT_EQ(l2_norm(inv_laplacian_meanzero(SpectralField(g, Rank::scalar))), 0.0);
  SpectralField shifted = f;
  shifted.at(0, 0, 0) = 0.1;
  EXPECT_THROW(inv_laplacian_meanzero(shifted), DomainError);
}

TEST(Leray, AnnihilatesGradientsKeepsMean) {
  Grid2D g(32);
  SpectralField q = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  SpectralField v = gradient(q);
  v.at(0, 0, 0) = 0.3;
  SpectralField pv = leray_project(v);
  EXPECT_NEAR(pv.at(0, 0, 0).real(), 0.3, 1e-15);
  pv.at(0, 0, 0) = 0.0;
  EXPECT_LT(l2_norm(pv), 1e-14);
}

TEST(Leray, TaylorGreenUnchanged) {
  Grid2D g(32);
  SpectralField tg = taylor_green(g);
  EXPECT_LT(l2_norm(leray_project(tg) - tg), 1e-14);
}

TEST(Leray, IdempotentAndDivergenceFree) {
  Grid2D g(32);
  SpectralField v = transform_forward(random_physical(g, Rank::vector, 9));
  SpectralField pv = leray_project(v);
  EXPECT_LT(max_divergence(pv), 1e-12 * norms(v).h1_semi);
  EXPECT_LT(l2_norm(leray_project(pv) - pv), 1e-14 * l2_norm(v));
}

TEST(Leray, HelmholtzReconstruction) {
  Grid2D g(32);
  for (unsigned s = 0; s < 5; ++s) {
    SpectralField v = strip_nyquist(transform_forward(random_physical(g, Rank::vector, 100 + s)));
    SpectralField rebuilt = leray_project(v) + gradient(scalar_potential(v));
    EXPECT_LT(l2_norm(rebuilt - v), 1e-12 * l2_norm(v));
  }
}

TEST(ScalarPotential, PureGradientAndSolenoidal) {
  Grid2D g(32);
  SpectralField q = spectral_from(g, Rank::scalar, [](int, double x1, double) { return std::cos(2 * pi * x1); });
  EXPECT_LT(l2_norm(scalar_potential(gradient(q)) - q), 1e-14);
  EXPECT_LT(l2_norm(scalar_potential(taylor_green(g))), 1e-15);
}

TEST(Gradient, CosineDerivative) {
  Grid2D g(16);
  SpectralField q = spectral_from(g, Rank::scalar, [](int, double x1, double x2) { return std::cos(2 * pi * (x1 + 2 * x2)); });
  SpectralField expect = spectral_from(g, Rank::vector, [](int c, double x1, double x2) {
    return -2 * pi * (c == 0 ? 1.0 : 2.0) * std::sin(2 * pi * (x1 + 2 * x2));
  });
  EXPECT_LT(l2_norm(gradient(q) - expect), 1e-12);
  EXPECT_THROW(gradient(expect), ShapeError);
}

TEST(Convect, ZeroCases) {
  Grid2D g(32);
  SpectralField b = smooth_random(g, Rank::vector, 1);
  SpectralField zero(g, Rank::vector);
  EXPECT_EQ(l2_norm(convect(zero, b, true)), 0.0);
  SpectralField c = spectral_from(g, Rank::vector, [](int k, double, double) { return k == 0 ? 1.5 : -2.0; });
  EXPECT_LT(l2_norm(convect(b, c, true)), 1e-14);
  EXPECT_THROW(convect(b, SpectralField(Grid2D(16), Rank::vector), true), ShapeError);
}

TEST(Convect, MatchesClosedForm) {
  // a = (1, 0), b = (sin 2 pi x2, cos 2 pi x1): (a.grad) b = (0, -2 pi sin 2 pi x1)
  Grid2D g(32);
  SpectralField a = spectral_from(g, Rank::vector, [](int c, double, double) { return c == 0 ? 1.0 : 0.0; });
  SpectralField b = spectral_from(g, Rank::vector, [](int c, double x1, double x2) {
    return c == 0 ? std::sin(2 * pi * x2) : std::cos(2 * pi * x1);
  });
  SpectralField expect =
      spectral_from(g, Rank::vector, [](int c, double x1, double) { return c == 0 ? 0.0 : -2 * pi * std::sin(2 * pi * x1); });
  EXPECT_LT(l2_norm(convect(a, b, true) - expect), 1e-12);
}

TEST(Convect, TaylorGreenSelfAdvectionIsGradient) {
  // (g . grad) g from the closed form; it is a pure gradient
  Grid2D g(32);
  SpectralField tg = taylor_green(g);
  SpectralField expect = spectral_from(g, Rank::vector, [](int c, double x1, double x2) {
    const double s1 = std::sin(2 * pi * x1), c1 = std::cos(2 * pi * x1);
    const double s2 = std::sin(2 * pi * x2), c2 = std::cos(2 * pi * x2);
    const double u1 = c1 * s2, u2 = -s1 * c2;
    if (c == 0) return u1 * (-2 * pi * s1 * s2) + u2 * (2 * pi * c1 * c2);
    return u1 * (-2 * pi * c1 * c2) + u2 * (2 * pi * s1 * s2);
  });
  SpectralField got = convect(tg, tg, true);
  EXPECT_LT(l2_norm(got - expect), 1e-12);
  EXPECT_LT(l2_norm(leray_project(got)), 1e-12);
}

TEST(Convect, TransportCancellation) {
  Grid2D g(32);
  std::mt19937 gen(42);
  for (int trial = 0; trial < 100; ++trial) {
    SpectralField a = leray_project(transform_forward(random_physical(g, Rank::vector, 1000 + trial)));
    SpectralField w = transform_forward(random_physical(g, Rank::vector, 5000 + trial));
    const Norms na = norms(a), nw = norms(w);
    const double ha = std::hypot(na.l2, na.h1_semi), hw = std::hypot(nw.l2, nw.h1_semi);
    EXPECT_LE(std::abs(inner_product(convect(a, w, true), w)), 1e-10 * ha * hw * hw);
  }
}

TEST(ConvectSkew, ExactAntisymmetryWithoutDealiasing) {
  Grid2D g(32);
  for (int trial = 0; trial < 10; ++trial) {
    SpectralField a = transform_forward(random_physical(g, Rank::vector, 300 + trial));  // not solenoidal
    SpectralField b = transform_forward(random_physical(g, Rank::vector, 700 + trial));
    const double scale = l2_norm(convect(a, b, false)) * l2_norm(b);
    EXPECT_LE(std::abs(inner_product(convect_skew(a, b, false), b)), 1e-13 * scale);
    EXPECT_LE(std::abs(inner_product(convect_skew(b, b, false), b)), 1e-13 * l2_norm(convect(b, b, false)) * l2_norm(b));
  }
  SpectralField a = smooth_random(g, Rank::vector, 5);
  EXPECT_EQ(l2_norm(convect_skew(a, SpectralField(g, Rank::vector), true)), 0.0);
}

TEST(ConvectSkew, EqualsConvectForSolenoidalAdvection) {
  Grid2D g(32);
  SpectralField a = leray_project(smooth_random(g, Rank::vector, 8));
  SpectralField b = smooth_random(g, Rank::vector, 9);
  EXPECT_LT(l2_norm(convect_skew(a, b, true) - convect(a, b, true)), 1e-11 * l2_norm(convect(a, b, true)));
}

TEST(TensorDivergence, ConstantIdentity) {
  Grid2D g(16);
  SpectralField t = spectral_from(g, Rank::matrix, [](int c, double, double) { return (c == 0 || c == 3) ? 2.0 : 0.0; });
  EXPECT_LT(l2_norm(tensor_divergence(t)), 1e-15);
}

TEST(TensorDivergence, FiniteDifferenceOracle) {
  // T = v (x) w with constant w; second-order central differences on 64^2
  Grid2D g(64);
  const double w0 = 0.7, w1 = -1.3;
  auto v = [](int c, double x1, double x2) {
    return c == 0 ? std::cos(2 * pi * x1) * std::sin(2 * pi * x2) : std::sin(4 * pi * x1) + std::cos(2 * pi * x2);
  };
  SpectralField t = spectral_from(g, Rank::matrix, [&](int c, double x1, double x2) {
    return v(c / 2, x1, x2) * (c % 2 == 0 ? w0 : w1);
  });
  PhysicalField got = transform_backward(tensor_divergence(t));
  const double h = 1e-4;  // FD step on the closed form, sampled at the 64^2 nodes
  double worst = 0.0;
  for (std::size_t i1 = 0; i1 < 64; ++i1) {
    for (std::size_t i2 = 0; i2 < 64; ++i2) {
      const double x1 = g.x(i1), x2 = g.x(i2);
      for (int i = 0; i < 2; ++i) {
        const double d1 = (v(i, x1 + h, x2) - v(i, x1 - h, x2)) / (2 * h);
        const double d2 = (v(i, x1, x2 + h) - v(i, x1, x2 - h)) / (2 * h);
        worst = std::max(worst, std::abs(got.at(i, i1, i2) - (w0 * d1 + w1 * d2)));
      }
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(TensorDivergence, WeakFormAgreement) {
  // (div T, phi) = -(T, grad phi) for symmetric T and any phi
  Grid2D g(32);
  SpectralField a = smooth_random(g, Rank::vector, 21);
  SpectralField t = outer(a, a, false);
  SpectralField phi = smooth_random(g, Rank::vector, 22);
  SpectralField grad_phi(g, Rank::matrix);
  for (int i = 0; i < 2; ++i) {
    grad_phi.set_component(2 * i, partial(phi.scalar_component(i), 0));
    grad_phi.set_component(2 * i + 1, partial(phi.scalar_component(i), 1));
  }
  const double lhs = inner_product(tensor_divergence(t), phi);
  const double rhs = -inner_product(t, grad_phi);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST(Dealias, TruncatesHighModes) {
  Grid2D g(32);
  SpectralField f = transform_forward(random_physical(g, Rank::scalar, 4));
  SpectralField d = dealias(f);
  for (std::size_t i1 = 0; i1 < g.n(); ++i1) {
    for (std::size_t j2 = 0; j2 < g.half(); ++j2) {
      if (!g.keeps_dealiased(i1, j2)) {
        EXPECT_EQ(std::abs(d.at(0, i1, j2)), 0.0);
      } else {
        EXPECT_EQ(d.at(0, i1, j2), f.at(0, i1, j2));
      }
    }
  }
}

TEST(Field, RankChecks) {
  Grid2D g(16);
  EXPECT_THROW(divergence(SpectralField(g, Rank::scalar)), ShapeError);
  EXPECT_THROW(leray_project(SpectralField(g, Rank::matrix)), ShapeError);
  EXPECT_THROW(SpectralField(g, Rank::scalar) + SpectralField(g, Rank::vector), ShapeError);
  EXPECT_THROW(SpectralField(g, Rank::scalar) + SpectralField(Grid2D(32), Rank::scalar), ShapeError);
}
