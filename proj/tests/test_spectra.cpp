#include <gtest/gtest.h>

#include <algorithm>

#include "nnspec/limitlaw.hpp"
#include "nnspec/models.hpp"
#include "nnspec/spectra.hpp"
#include "support.hpp"

using namespace nnspec;

namespace {

CMatrix jordan(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i + 1 < n; ++i) m(i, i + 1) = 1.0;
  return m;
}

}  // namespace

TEST(Esd, Diagonal) {
  CMatrix m(5, 5);
  for (std::size_t i = 0; i < 5; ++i) m(i, i) = static_cast<double>(i + 1);
  const auto s = esd(m, {1.5, 9, "diag"});
  ASSERT_EQ(s.points.size(), 5u);
  EXPECT_EQ(s.n, 5u);
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.model, "diag");
  std::vector<double> re;
  for (auto p : s.points) {
    EXPECT_NEAR(p.imag(), 0.0, 1e-13);
    re.push_back(p.real());
  }
  std::sort(re.begin(), re.end());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(re[i], static_cast<double>(i + 1), 1e-12);
}

TEST(Esd, NilpotentJordan) {
  const auto s = esd(jordan(100));
  ASSERT_EQ(s.points.size(), 100u);
  for (auto p : s.points) EXPECT_LE(std::abs(p), 1e-6);
}

TEST(Esd, PerturbedJordanNearUnitCircle) {
  const auto pm = perturb(jordan(500), {1.0, 3});
  const auto s = esd(pm);
  const auto inside = std::count_if(s.points.begin(), s.points.end(), [](Complex p) {
    return std::abs(p) >= 0.9 && std::abs(p) <= 1.1;
  });
  EXPECT_GE(static_cast<double>(inside) / 500.0, 0.95);
}

TEST(Logpot, UpperTriangular) {
  auto m = testing_support::random_matrix(40, 3);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = 0.0;
  const Complex z(0.1, 0.4);
  double s = 0.0;
  for (std::size_t i = 0; i < 40; ++i) s += std::log(std::abs(m(i, i) - z));
  EXPECT_NEAR(empirical_logpot(m, z), s / 40.0, 1e-12);
}

TEST(Logpot, ZeroMatrix) {
  EXPECT_NEAR(empirical_logpot(CMatrix(7, 7), std::exp(1.0)), 1.0, 1e-15);
  EXPECT_EQ(empirical_logpot(CMatrix(7, 7), 0.0), kNegInf);
}

TEST(Logpot, MatchesEigenvalueSum) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto m = testing_support::random_matrix(50, seed);
    const auto s = esd(m);
    for (Complex z : {Complex(10, 0), Complex(0.3, -0.2), Complex(-2, 3)}) {
      double dmin = kInf;
      for (auto p : s.points) dmin = std::min(dmin, std::abs(z - p));
      if (dmin < 0.1) continue;
      EXPECT_NEAR(empirical_logpot(m, z), sample_logpot(s.points, z), 1e-6);
    }
  }
}

TEST(Logpot, TranslationConsistent) {
  const auto m = testing_support::random_matrix(60, 8);
  const Complex c(0.7, -1.3), z(0.2, 0.5);
  EXPECT_NEAR(empirical_logpot(m.shifted(-c), z + c), empirical_logpot(m, z), 1e-10);
}

TEST(Logpot, BatchedMatchesSingle) {
  const auto m = testing_support::random_matrix(70, 9);
  const auto zs = test_ring(16, 1.5, Complex(0.1, 0.1));
  const auto batch = empirical_logpots(m, zs);
  for (std::size_t k = 0; k < zs.size(); ++k) EXPECT_NEAR(batch[k], empirical_logpot(m, zs[k]), 1e-10);
}

TEST(Grid, ZeroMatrixGivesModulus) {
  const GridSpec spec{-1.0, 1.0, -0.5, 0.5, 9, 5};
  const auto g = pseudospectrum_grid(CMatrix(6, 6), spec);
  ASSERT_EQ(g.values.size(), 45u);
  EXPECT_EQ(g.failures, 0u);
  for (std::size_t j = 0; j < spec.ny; ++j)
    for (std::size_t i = 0; i < spec.nx; ++i) EXPECT_NEAR(g.at(i, j), std::abs(Complex(spec.x(i), spec.y(j))), 1e-14);
}

TEST(Grid, JordanAtOriginIsZero) {
  const GridSpec spec{-1.0, 1.0, -1.0, 1.0, 3, 3};
  for (auto mode : {linalg::SminMode::Dense, linalg::SminMode::InverseIteration}) {
    const auto g = pseudospectrum_grid(jordan(20), spec, mode);
    EXPECT_EQ(g.at(1, 1), 0.0);
  }
}

TEST(Grid, OneLipschitz) {
  const auto m = testing_support::random_matrix(30, 12);
  const GridSpec spec{-2.0, 2.0, -2.0, 2.0, 25, 25};
  const auto g = pseudospectrum_grid(m, spec);
  const double hx = 4.0 / 24.0;
  for (std::size_t j = 0; j < spec.ny; ++j)
    for (std::size_t i = 0; i < spec.nx; ++i) {
      if (i + 1 < spec.nx) {
        EXPECT_LE(std::abs(g.at(i + 1, j) - g.at(i, j)), hx + 1e-12);
      }
      if (j + 1 < spec.ny) {
        EXPECT_LE(std::abs(g.at(i, j + 1) - g.at(i, j)), hx + 1e-12);
      }
    }
}

TEST(Grid, ModesAgree) {
  const auto m = testing_support::random_matrix(25, 13);
  const GridSpec spec{-1.0, 1.0, -1.0, 1.0, 7, 7};
  const auto a = pseudospectrum_grid(m, spec, linalg::SminMode::Dense);
  const auto b = pseudospectrum_grid(m, spec, linalg::SminMode::InverseIteration);
  for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-8 * (1.0 + a.values[k]));
}

TEST(Grid, WilkinsonLevelSetsNest) {
  const std::size_t n = 100;
  std::vector<Complex> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(n);
  const GridSpec spec{-1.5, 1.5, -1.5, 1.5, 101, 101};
  const auto g = pseudospectrum_grid(build_bidiagonal(d), spec);
  EXPECT_EQ(g.failures, 0u);
  std::size_t prev = g.values.size() + 1;
  for (int k = 1; k <= 4; ++k) {
    const double level = std::pow(100.0, -k);
    std::size_t count = 0;
    for (std::size_t q = 0; q < g.values.size(); ++q) {
      if (g.values[q] < level) {
        ++count;
        // nesting: inside level k implies inside level k - 1
        EXPECT_LT(g.values[q], std::pow(100.0, -(k - 1)));
      }
    }
    EXPECT_GT(count, 0u) << k;
    EXPECT_LT(count, prev) << k;
    prev = count;
  }
  // the corners lie outside every circle |w - x| = 1, x in [-1, 1]
  EXPECT_GT(g.at(0, 0), 1e-2);
  EXPECT_GT(g.at(100, 100), 1e-2);
  EXPECT_LT(g.at(50, 50), 1e-8);
}

TEST(Grid, SpecValidation) {
  EXPECT_THROW(pseudospectrum_grid(CMatrix(2, 2), GridSpec{0.0, 1.0, 0.0, 1.0, 0, 3}), std::invalid_argument);
  EXPECT_THROW(pseudospectrum_grid(CMatrix(2, 2), GridSpec{1.0, 0.0, 0.0, 1.0, 3, 3}), std::invalid_argument);
  const GridSpec single{0.5, 0.5, 0.25, 0.25, 1, 1};
  EXPECT_NO_THROW(single.validate());
  EXPECT_EQ(single.x(0), 0.5);
}

TEST(Compare, IdenticalSamples) {
  const auto pts = sample_limit_law(TwistedSymbol::constant({0.0, 1.0, 1.0}), 2000, 5);
  const auto zs = test_ring(32, 4.0);
  const auto r = compare_measures(pts, pts, zs);
  EXPECT_EQ(r.logpot_rmse, 0.0);
  EXPECT_EQ(r.logpot_max, 0.0);
  EXPECT_EQ(r.radial_wasserstein, 0.0);
  EXPECT_EQ(r.angular_ks, 0.0);
  EXPECT_EQ(r.support_coverage, 1.0);
  EXPECT_EQ(r.test_points_used, 32u);
  EXPECT_TRUE(r.excluded.empty());
}

TEST(Compare, PointMasses) {
  const std::vector<Complex> a(3, 0.0), b(2, 1.0);
  const auto r = compare_measures(a, b, test_ring(8, 5.0));
  EXPECT_NEAR(r.radial_wasserstein, 1.0, 1e-15);
  EXPECT_EQ(r.support_coverage, 0.0);
}

TEST(Compare, UniformCircleAgainstQuantiles) {
  const std::size_t n = 10000;
  const auto u = sample_limit_law(TwistedSymbol::constant({0.0, 1.0}), n, 6);
  std::vector<Complex> q(n);
  for (std::size_t k = 0; k < n; ++k) q[k] = std::polar(1.0, -kPi + 2.0 * kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(n));
  const auto r = compare_measures(u, q, test_ring(32, 3.0));
  EXPECT_LE(r.radial_wasserstein, 0.02);
  EXPECT_LE(r.angular_ks, 0.02);
  // sd of log|3 - U| is about 0.24, so 4 standard errors at n = 1e4
  EXPECT_LE(r.logpot_max, 0.01);
  EXPECT_GE(r.support_coverage, 0.999);
}

TEST(Compare, Symmetric) {
  const auto a = sample_limit_law(TwistedSymbol::constant({0.0, 1.0, 1.0}), 1500, 7);
  const auto b = sample_limit_law(TwistedSymbol::constant({0.0, 1.0, 0.8}), 1300, 8);
  const auto zs = test_ring(32, 4.0);
  const auto ab = compare_measures(a, b, zs), ba = compare_measures(b, a, zs);
  EXPECT_NEAR(ab.radial_wasserstein, ba.radial_wasserstein, 1e-12);
  EXPECT_NEAR(ab.angular_ks, ba.angular_ks, 1e-12);
  EXPECT_NEAR(ab.logpot_rmse, ba.logpot_rmse, 1e-12);
}

TEST(Compare, ExcludesPointsNearSupport) {
  const std::vector<Complex> a{0.0, 1.0}, b{0.5};
  const std::vector<Complex> zs{3.0, 1.05, Complex(0, 2), 0.45};
  const auto r = compare_measures(a, b, zs);
  EXPECT_EQ(r.excluded, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(r.test_points_used, 2u);
  EXPECT_THROW(compare_measures(std::vector<Complex>{}, b, zs), std::invalid_argument);
}

TEST(Compare, WassersteinAndKolmogorovHelpers) {
  EXPECT_NEAR(wasserstein1({0.0, 1.0}, {0.0, 0.0, 1.0, 1.0}), 0.0, 1e-15);
  EXPECT_NEAR(wasserstein1({0.0}, {1.0, 3.0}), 2.0, 1e-15);
  EXPECT_NEAR(kolmogorov({0.0, 1.0}, {2.0, 3.0}), 1.0, 1e-15);
  EXPECT_NEAR(kolmogorov({0.0, 2.0}, {1.0, 3.0}), 0.5, 1e-15);
}

TEST(TestRing, Geometry) {
  const auto z = test_ring(32, 4.0, Complex(1, 1));
  ASSERT_EQ(z.size(), 32u);
  for (auto p : z) EXPECT_NEAR(std::abs(p - Complex(1, 1)), 4.0, 1e-14);
}
