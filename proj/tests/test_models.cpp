#include <gtest/gtest.h>

#include "nnspec/linalg.hpp"
#include "nnspec/models.hpp"
#include "oracles.hpp"

using namespace nnspec;

namespace {

bool banded_upper(const CMatrix& m, std::size_t band) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if ((j < i || j > i + band) && m(i, j) != Complex{}) return false;
  return true;
}

TwistedSymbol wilkinson() { return {{Generator::affine(-1.0, 2.0), Generator::constant(1.0)}}; }

}  // namespace

TEST(Toeplitz, ShiftMatrix) {
  const std::vector<Complex> a{0.0, 1.0};
  EXPECT_EQ(build_banded_toeplitz(a, 6), jordan_block(6, 0.0));
}

TEST(Toeplitz, TwoSuperdiagonals) {
  const std::vector<Complex> a{0.0, 1.0, 1.0};
  const auto m = build_banded_toeplitz(a, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), (j == i + 1 || j == i + 2) ? Complex(1.0) : Complex{});
}

TEST(Toeplitz, ScalarSymbol) {
  const std::vector<Complex> a{Complex(2, -1)};
  EXPECT_EQ(build_banded_toeplitz(a, 3), Complex(2, -1) * CMatrix::identity(3));
}

TEST(Toeplitz, RejectsShortMatrix) {
  const std::vector<Complex> a{0.0, 1.0, 1.0};
  EXPECT_THROW(build_banded_toeplitz(a, 2), std::invalid_argument);
  EXPECT_THROW(build_twisted(TwistedSymbol::constant(a), 1), std::invalid_argument);
}

TEST(Twisted, WilkinsonDiagonal) {
  const std::size_t n = 10;
  const auto m = build_twisted(wilkinson(), n);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_DOUBLE_EQ(m(i, i).real(), -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(n));
    if (i + 1 < n) {
      EXPECT_EQ(m(i, i + 1), Complex(1.0));
    }
  }
  EXPECT_TRUE(banded_upper(m, 1));
}

TEST(Twisted, ConstantGeneratorsMatchToeplitzExactly) {
  const std::vector<Complex> a{Complex(0.3, 1), -2.0, Complex(0, 0.5), 4.0};
  EXPECT_EQ(build_twisted(TwistedSymbol::constant(a), 17), build_banded_toeplitz(a, 17));
}

TEST(Twisted, ZeroGenerators) {
  const TwistedSymbol s{{Generator::constant(0.0), Generator::constant(0.0)}};
  EXPECT_EQ(build_twisted(s, 5), CMatrix(5, 5));
}

TEST(Generator, Families) {
  EXPECT_EQ(Generator::affine(1.0, 2.0)(0.25), Complex(1.5));
  EXPECT_EQ(Generator::polynomial({1.0, 0.0, 3.0})(0.5), Complex(1.75));
  const auto t = Generator::tabulated({0.0, 2.0, 0.0});
  EXPECT_DOUBLE_EQ(t(0.25).real(), 1.0);
  EXPECT_DOUBLE_EQ(t(-1.0).real(), 0.0);
  EXPECT_DOUBLE_EQ(t(2.0).real(), 0.0);
  EXPECT_TRUE(Generator::polynomial({3.0, 0.0}).is_constant());
  EXPECT_FALSE(t.is_constant());
}

TEST(Regularized, ThresholdKillsEverything) {
  // N^{-delta2} = 256^{-0.4} ~ 0.109 exceeds every coefficient
  const TwistedSymbol s{{Generator::affine(0.01, 0.05), Generator::constant(0.1)}};
  EXPECT_EQ(build_regularized(s, 256, {0.01, 0.4, 0.05}), CMatrix(256, 256));
}

TEST(Regularized, ConstantSymbolMatchesToeplitz) {
  // every modulus clears the threshold N^{-delta2}
  const std::vector<Complex> a{1.5, 1.0, Complex(0, 1)};
  EXPECT_EQ(build_regularized(TwistedSymbol::constant(a), 300, {}), build_banded_toeplitz(a, 300));
}

TEST(Regularized, BlocksAgainstDirectScan) {
  const std::size_t n = 256;
  const RegularizationParams p{0.02, 0.01, 0.1};
  const auto model = regularize(wilkinson(), n, p);
  const auto m = model.matrix();
  // every block is constant along each diagonal
  const auto runs = oracle::constant_runs(m, 1);
  std::vector<std::size_t> starts(model.start.begin(), model.start.end() - 1);
  // the direct block index floor(i N^{delta1-1}) with the last two blocks merged
  std::vector<std::size_t> expect{0};
  for (std::size_t i = 2; i <= n; ++i)
    if (regularized_block_of(i, n, p.delta1) != regularized_block_of(i - 1, n, p.delta1)) expect.push_back(i - 1);
  if (expect.size() >= 2) expect.pop_back();
  EXPECT_EQ(starts, expect);
  for (auto r : runs) EXPECT_TRUE(std::find(starts.begin(), starts.end(), r) != starts.end()) << r;
  for (std::size_t k = 0; k < model.blocks(); ++k) {
    for (std::size_t i = model.start[k]; i < model.start[k + 1]; ++i) {
      EXPECT_EQ(m(i, i), model.coeffs[k][0]);
      if (i + 1 < n) {
        EXPECT_EQ(m(i, i + 1), model.coeffs[k][1]);
      }
    }
  }
}

TEST(Regularized, BlockLengthsWithinFactorTwo) {
  for (std::size_t n : {256, 1000, 3000}) {
    const double delta1 = 0.05;
    const auto model = regularize(wilkinson(), n, {delta1, 0.01, 0.3});
    const double target = std::pow(static_cast<double>(n), 1.0 - delta1);
    for (std::size_t k = 0; k < model.blocks(); ++k) {
      EXPECT_GE(static_cast<double>(model.block_length(k)), target / 2.0) << n << " " << k;
      EXPECT_LE(static_cast<double>(model.block_length(k)), 2.0 * target) << n << " " << k;
    }
  }
}

TEST(Regularized, CloseToTwistedForLipschitzGenerators) {
  // f0 = -1 + 2x has Lipschitz constant 2; a merged block spans x-width at
  // most 2 N^{-delta1}, twisted rows sit 1/N off the block grid, and the
  // threshold contributes at most N^{-delta2}
  const std::size_t n = 1000;
  const RegularizationParams p{0.2, 0.3, 0.45};
  const auto diff = build_regularized(wilkinson(), n, p) - build_twisted(wilkinson(), n);
  const double dn = static_cast<double>(n), lip = 2.0;
  const double bound = lip * (2.0 * std::pow(dn, -p.delta1) + 1.0 / dn) + std::pow(dn, -p.delta2);
  EXPECT_LE(diff.max_abs(), bound);
  EXPECT_GT(diff.max_abs(), 0.0);
}

TEST(Regularized, ParameterValidation) {
  const auto s = wilkinson();
  EXPECT_NO_THROW(build_regularized(s, 100, {0.01, 0.01, 0.05}, 2.0));
  EXPECT_THROW(build_regularized(s, 100, {0.2, 0.01, 0.05}, 2.0), std::invalid_argument);    // above cap
  EXPECT_THROW(build_regularized(s, 100, {0.02, 0.01, 0.05}, 2.0), std::invalid_argument);   // delta1 >= delta3/4
  EXPECT_THROW(build_regularized(s, 100, {0.01, 0.01, 0.6}, 100.0), std::invalid_argument);  // outside (0, 1/2)
}

TEST(Bidiagonal, Cases) {
  EXPECT_EQ(build_bidiagonal(std::vector<Complex>(5, 0.0)), jordan_block(5, 0.0));
  const auto j = build_bidiagonal(std::vector<Complex>(4, Complex(0.5, 0.5)));
  EXPECT_EQ(j, jordan_block(4, Complex(0.5, 0.5)));
  const auto one = build_bidiagonal(std::vector<Complex>{Complex(3, 1)});
  ASSERT_EQ(one.rows(), 1u);
  EXPECT_EQ(one(0, 0), Complex(3, 1));
}

TEST(SampleDiagonal, Profile) {
  const auto d = sample_diagonal(DiagonalLaw::profile(Generator::affine(0.0, 1.0)), 4, 0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d[i], Complex(static_cast<double>(i + 1) / 4.0));
}

TEST(SampleDiagonal, UniformMeanAndReproducibility) {
  const std::size_t n = 100000;
  const auto law = DiagonalLaw::uniform(-2.0, 2.0);
  const auto d = sample_diagonal(law, n, 42);
  Complex s{};
  for (auto x : d) {
    s += x;
    ASSERT_GE(x.real(), -2.0);
    ASSERT_LT(x.real(), 2.0);
  }
  EXPECT_LE(std::abs(s / static_cast<double>(n)), 3.0 * 4.0 / std::sqrt(12.0 * static_cast<double>(n)));
  EXPECT_EQ(d, sample_diagonal(law, n, 42));
  EXPECT_NE(d, sample_diagonal(law, n, 43));
}

TEST(SampleDiagonal, DiscreteLawFrequencies) {
  const auto law = DiagonalLaw::discrete({1.0, Complex(0, 2)}, {0.25, 0.75});
  const auto d = sample_diagonal(law, 40000, 3);
  const double frac = static_cast<double>(std::count(d.begin(), d.end(), Complex(1.0))) / 40000.0;
  EXPECT_NEAR(frac, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / 40000.0));
}

TEST(DiagonalLaw, Validation) {
  EXPECT_THROW(DiagonalLaw::uniform(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(DiagonalLaw::discrete({1.0, 2.0}, {0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(DiagonalLaw::discrete({1.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST(Ginibre, SecondMoment) {
  const std::size_t n = 500;
  const auto g = sample_ginibre(n, 1);
  double s = 0.0, re2 = 0.0;
  for (auto x : g.data()) {
    s += std::norm(x);
    re2 += x.real() * x.real();
  }
  const double nn = static_cast<double>(n * n);
  EXPECT_NEAR(s / nn, 1.0, 3.0 / std::sqrt(nn) * std::sqrt(2.0));
  EXPECT_NEAR(re2 / nn, 0.5, 3.0 / std::sqrt(nn));
}

TEST(Ginibre, OperatorNormScale) {
  const std::size_t n = 500;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double r = linalg::operator_norm(sample_ginibre(n, seed)) / std::sqrt(static_cast<double>(n));
    EXPECT_GE(r, 1.8);
    EXPECT_LE(r, 2.2);
  }
}

TEST(Ginibre, Reproducible) {
  EXPECT_EQ(sample_ginibre(50, 9), sample_ginibre(50, 9));
  EXPECT_FALSE(sample_ginibre(50, 9) == sample_ginibre(50, 10));
}

TEST(Perturb, VanishingNoise) {
  const std::vector<Complex> a{0.0, 1.0, 1.0};
  const auto m = build_banded_toeplitz(a, 100);
  EXPECT_LE((perturb(m, {50.0, 1}) - m).max_abs(), 1e-12);
}

TEST(Perturb, ScaleOfPureNoise) {
  const auto p = perturb(CMatrix(100, 100), {1.0, 5});
  EXPECT_NEAR(p.frobenius_norm(), 1.0, 0.2);
}

TEST(Perturb, NoiseDependsOnlyOnSeed) {
  const auto m1 = build_banded_toeplitz(std::vector<Complex>{0.0, 1.0}, 30);
  const auto m2 = build_twisted(wilkinson(), 30);
  const NoiseSpec noise{1.5, 77};
  // equal up to the rounding of adding and removing M
  EXPECT_LE(((perturb(m1, noise) - m1) - (perturb(m2, noise) - m2)).max_abs(), 1e-15);
  EXPECT_LE(((perturb(m1, noise) - m1) - std::pow(30.0, -1.5) * sample_ginibre(30, 77)).max_abs(), 1e-15);
}

TEST(Perturb, RejectsSubcriticalGamma) {
  EXPECT_THROW(perturb(CMatrix(3, 3), {0.4, 1}), std::invalid_argument);
  EXPECT_THROW(perturb(CMatrix(3, 3), {0.5, 1}), std::invalid_argument);
}

TEST(Haar, FrameIsOrthonormal) {
  const auto f = sample_haar_frame(9, 4, 3);
  const auto g = f.adjoint() * f;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)), 0.0, 1e-14);
}

TEST(Builders, AllBandedUpperTriangular) {
  const TwistedSymbol s{{Generator::affine(1.0, -1.0), Generator::polynomial({0.0, 1.0, 1.0}), Generator::constant(2.0)}};
  EXPECT_TRUE(banded_upper(build_twisted(s, 40), 2));
  EXPECT_TRUE(banded_upper(build_regularized(s, 40, {}), 2));
  EXPECT_TRUE(banded_upper(build_banded_toeplitz(std::vector<Complex>{1.0, 2.0, 3.0}, 40), 2));
}
