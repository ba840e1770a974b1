#include <gtest/gtest.h>

#include <algorithm>

#include "nnspec/limitlaw.hpp"
#include "nnspec/rigidity.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nnspec;

namespace {

std::vector<Complex> random_diagonal(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, 4);
  std::vector<Complex> d(n);
  for (auto& x : d) x = scale * rng.complex_gaussian();
  return d;
}

std::vector<Complex> matvec(const CMatrix& m, const std::vector<Complex>& v) {
  std::vector<Complex> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * v[j];
  return out;
}

std::vector<std::size_t> grid(std::size_t n, double delta) {
  std::vector<std::size_t> pts;
  const double dn = static_cast<double>(n);
  for (std::size_t k = 1; k <= static_cast<std::size_t>(std::floor(std::pow(dn, 1.0 - delta))); ++k)
    pts.push_back(static_cast<std::size_t>(std::floor(std::pow(dn, delta) * static_cast<double>(k))));
  return pts;
}

// crossing points of log|f(k/N)| against +-N^{-delta}, found by a direct scan
std::vector<std::size_t> crossings(const std::function<double(double)>& absf, std::size_t n, double delta) {
  const double tol = std::pow(static_cast<double>(n), -delta);
  std::vector<std::size_t> out{1};
  int side = std::log(absf(1.0 / static_cast<double>(n))) < 0.0 ? -1 : 1;
  for (std::size_t k = 2; k <= n; ++k) {
    const double v = std::log(absf(static_cast<double>(k) / static_cast<double>(n)));
    if ((side < 0 && v > tol) || (side > 0 && v < -tol)) {
      out.push_back(k);
      side = -side;
    }
  }
  return out;
}

}  // namespace

TEST(Dprod, EmptyProductIsOne) {
  const std::vector<Complex> d{3.0, 4.0};
  const auto p = dprod(d, 2, 2);
  EXPECT_EQ(p.log_abs, 0.0);
  EXPECT_EQ(p.value(), Complex(1.0));
}

TEST(Dprod, Twos) {
  const std::vector<Complex> d(5, 2.0);
  EXPECT_NEAR(std::abs(dprod(d, 1, 4).value() - 8.0), 0.0, 1e-14);
}

TEST(Dprod, MatchesNaiveLoop) {
  const auto d = random_diagonal(30, 1);
  CounterRng rng(2, 2);
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t i = 1 + static_cast<std::size_t>(rng.uniform() * 31), j = 1 + static_cast<std::size_t>(rng.uniform() * 31);
    if (i > j) std::swap(i, j);
    const Complex want = oracle::dprod(d, i, j);
    EXPECT_LE(std::abs(dprod(d, i, j).value() - want), 1e-12 * std::abs(want));
  }
}

TEST(Dprod, ZeroAndRange) {
  const std::vector<Complex> d{1.0, 0.0, 2.0};
  EXPECT_EQ(dprod(d, 1, 4).log_abs, kNegInf);
  EXPECT_EQ(dprod(d, 1, 4).value(), Complex{});
  EXPECT_THROW(dprod(d, 0, 2), std::out_of_range);
  EXPECT_THROW(dprod(d, 3, 2), std::out_of_range);
  EXPECT_THROW(dprod(d, 1, 5), std::out_of_range);
  EXPECT_NO_THROW(dprod(d, 4, 4));
}

TEST(Witness, ZeroDiagonal) {
  const std::vector<Complex> d(6, 0.0);
  const auto w = witness_vector(d, 3, 5);
  const auto v = w.dense(6);
  const std::vector<Complex> e3{0, 0, 1, 0, 0, 0};
  EXPECT_EQ(v, e3);
  const auto mv = matvec(build_bidiagonal(d), v);
  const std::vector<Complex> e2{0, 1, 0, 0, 0, 0};
  EXPECT_EQ(mv, e2);
  EXPECT_EQ(w.tail.log_abs, kNegInf);
}

TEST(Witness, Twos) {
  const std::vector<Complex> d(5, 2.0);
  const auto w = witness_vector(d, 1, 3);
  const auto v = w.dense(5);
  const std::vector<Complex> want{1.0, -2.0, 4.0, 0.0, 0.0};
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(std::abs(v[k] - want[k]), 0.0, 1e-14);
  const auto mv = matvec(build_bidiagonal(d), v);
  const std::vector<Complex> mwant{0.0, 0.0, 8.0, 0.0, 0.0};
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(std::abs(mv[k] - mwant[k]), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(w.tail.value() - 8.0), 0.0, 1e-13);
}

TEST(Witness, SupportIdentity) {
  const std::size_t n = 40;
  const auto d = random_diagonal(n, 3);
  const auto m = build_bidiagonal(d);
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{1, 40}, {5, 17}, {12, 12}, {30, 40}, {2, 3}}) {
    const auto w = witness_vector(d, i, j);
    const auto v = w.dense(n);
    const auto mv = matvec(m, v);
    double scale = 0.0;
    for (auto x : v) scale = std::max(scale, std::abs(x));
    scale = std::max(scale, w.tail.abs());
    for (std::size_t r = 1; r <= n; ++r) {
      Complex want{};
      if (r + 1 == i) want = 1.0;
      if (r == j) want = w.tail.value();
      EXPECT_LE(std::abs(mv[r - 1] - want), 1e-12 * scale) << i << "," << j << " row " << r;
    }
    EXPECT_NEAR(w.log_projected_residual(), std::log(w.tail.abs()) - w.log_norm, 1e-12);
  }
}

TEST(Witness, SingleBlockNormalized) {
  const auto d = random_diagonal(25, 4);
  const auto ws = witness_vectors(d, BlockPartition::single(25));
  ASSERT_EQ(ws.size(), 1u);
  const auto v = ws[0].dense(25);
  const auto w = ws[0].dense_normalized(25);
  const double nv = norm2(v);
  EXPECT_NEAR(norm2(w), 1.0, 1e-14);
  for (std::size_t k = 0; k < 25; ++k) EXPECT_LE(std::abs(w[k] - v[k] / nv), 1e-14);
}

TEST(Witness, HugeProductsStayFinite) {
  const std::vector<Complex> d(400, 1e3);
  const auto w = witness_vector(d, 1, 400);
  EXPECT_TRUE(std::isfinite(w.log_norm));
  EXPECT_NEAR(norm2(w.normalized), 1.0, 1e-12);
  // ||v||^2 = sum 1e6^k, so the residual is 1e3 sqrt(1 - 1e-6)
  EXPECT_NEAR(w.log_projected_residual(), std::log(1e3) + 0.5 * std::log1p(-1e-6), 1e-12);
}

TEST(Witness, BlocksAreOrthogonal) {
  const auto d = random_diagonal(60, 5);
  const auto part = BlockPartition::from_points({7, 8, 20, 33, 51}, 60);
  const auto ws = witness_vectors(d, part);
  ASSERT_EQ(ws.size(), part.blocks());
  for (std::size_t a = 0; a < ws.size(); ++a) {
    EXPECT_EQ(ws[a].first, part.first(a));
    EXPECT_EQ(ws[a].last, part.last(a));
    const auto wa = ws[a].dense_normalized(60);
    for (std::size_t b = a + 1; b < ws.size(); ++b) {
      const auto wb = ws[b].dense_normalized(60);
      Complex ip{};
      for (std::size_t k = 0; k < 60; ++k) ip += std::conj(wa[k]) * wb[k];
      EXPECT_EQ(ip, Complex{});
    }
  }
}

TEST(Partition, Validation) {
  BlockPartition p;
  p.boundaries = {0, 5, 5, 10};
  EXPECT_THROW(p.validate(10), std::invalid_argument);
  p.boundaries = {0, 5, 9};
  EXPECT_THROW(p.validate(10), std::invalid_argument);
  const auto q = BlockPartition::from_points({0, 10, 4, 4, 7}, 10);
  EXPECT_EQ(q.boundaries, (std::vector<std::size_t>{0, 4, 7, 10}));
  EXPECT_NO_THROW(q.validate(10));
}

TEST(DBounds, Ones) {
  const std::vector<Complex> d(9, 1.0);
  const auto b = d_bounds(d, BlockPartition::single(9));
  EXPECT_DOUBLE_EQ(b.plus[0], 18.0);
  EXPECT_DOUBLE_EQ(b.minus[0], 18.0);
  EXPECT_DOUBLE_EQ(b.dfrak, 18.0);
}

TEST(DBounds, TwosGeometric) {
  const std::vector<Complex> d(30, 2.0);
  const auto b = d_bounds(d, BlockPartition::single(30));
  EXPECT_LE(b.minus[0], 4.0);
  EXPECT_LE(b.dfrak, 4.0);
}

TEST(DBounds, MatchesTripleLoop) {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const auto d = random_diagonal(40, seed, 1.5);
    const auto part = BlockPartition::from_points({6, 13, 14, 29}, 40);
    const auto b = d_bounds(d, part);
    double dfrak = 0.0;
    for (std::size_t j = 0; j < part.blocks(); ++j) {
      const auto [plus, minus] = oracle::d_bounds_block(d, part.first(j), part.last(j));
      EXPECT_NEAR(b.plus[j], plus, 1e-10 * plus);
      EXPECT_NEAR(b.minus[j], minus, 1e-10 * minus);
      dfrak = std::max(dfrak, std::min(plus, minus));
    }
    EXPECT_NEAR(b.dfrak, dfrak, 1e-10 * dfrak);
    EXPECT_GE(b.dfrak, 1.0);
  }
}

TEST(DBounds, ZeroEntryMakesMinusInfinite) {
  const std::vector<Complex> d{1.0, 0.0, 1.0, 1.0};
  const auto b = d_bounds(d, BlockPartition::single(4));
  EXPECT_EQ(b.minus[0], kInf);
  EXPECT_EQ(b.dfrak, b.plus[0]);
}

TEST(IidPartition, NoBadIndices) {
  const std::size_t n = 200;
  const std::vector<Complex> d(n, 2.0);
  const auto p = iid_partition(d, 0.25, 1.0, 0.5);
  EXPECT_EQ(p.boundaries, BlockPartition::from_points(grid(n, 0.25), n).boundaries);
}

TEST(IidPartition, TinyEntryBecomesBoundary) {
  const std::size_t n = 200;
  std::vector<Complex> d(n, 2.0);
  d[36] = std::pow(200.0, -10.0);  // row 37
  const auto p = iid_partition(d, 0.25, 1.0, 0.5);
  EXPECT_TRUE(std::count(p.boundaries.begin(), p.boundaries.end(), 37u));
  EXPECT_TRUE(std::count(p.boundaries.begin(), p.boundaries.end(), 38u));
}

TEST(IidPartition, EdgeCases) {
  const std::vector<Complex> one{2.0};
  EXPECT_EQ(iid_partition(one, 0.25, 1.0, 0.5).blocks(), 1u);
  EXPECT_THROW(iid_partition(std::vector<Complex>{}, 0.25, 1.0, 0.5), std::invalid_argument);
  const std::vector<Complex> d(10, 2.0);
  EXPECT_THROW(iid_partition(d, 0.6, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(iid_partition(d, 0.25, 0.0, 0.5), std::invalid_argument);
}

TEST(HolderPartition, LinearCrossesOnce) {
  const std::size_t n = 100;
  const double delta = 0.5;
  const auto p = holder_partition(Generator::affine(0.0, 2.0), n, delta);
  auto pts = grid(n, delta);
  const auto cx = crossings([](double t) { return 2.0 * t; }, n, delta);
  ASSERT_EQ(cx.size(), 2u);
  EXPECT_NEAR(static_cast<double>(cx[1]), 50.0, 10.0);
  pts.insert(pts.end(), cx.begin(), cx.end());
  EXPECT_EQ(p.boundaries, BlockPartition::from_points(pts, n).boundaries);
}

TEST(HolderPartition, ConstantAboveOne) {
  const std::size_t n = 100;
  const auto p = holder_partition(Generator::constant(2.0), n, 0.5);
  auto pts = grid(n, 0.5);
  pts.push_back(1);
  EXPECT_EQ(p.boundaries, BlockPartition::from_points(pts, n).boundaries);
  EXPECT_TRUE(p.warnings.empty());
}

TEST(HolderPartition, OscillatingProfile) {
  const std::size_t n = 300;
  const double delta = 0.3;
  auto f = [](double t) { return Complex(2.0 * std::cos(7.0 * t), 0.2); };
  const auto p = holder_partition(f, n, delta);
  auto pts = grid(n, delta);
  const auto cx = crossings([&](double t) { return std::abs(f(t)); }, n, delta);
  EXPECT_GE(cx.size(), 4u);
  pts.insert(pts.end(), cx.begin(), cx.end());
  EXPECT_EQ(p.boundaries, BlockPartition::from_points(pts, n).boundaries);
}

TEST(HolderPartition, VanishingProfileWarns) {
  const auto p = holder_partition(Generator::constant(0.0), 64, 0.5);
  EXPECT_FALSE(p.warnings.empty());
  EXPECT_EQ(p.boundaries, BlockPartition::from_points(grid(64, 0.5), 64).boundaries);
}

TEST(Sandwich, JordanSingleBlock) {
  const std::vector<Complex> d(60, 0.5);
  const auto rep = theorem31_check(d, BlockPartition::single(60));
  EXPECT_TRUE(rep.pass) << rep.diagnostics;
  EXPECT_EQ(rep.blocks, 1u);
  // one block: the witness bound is |z|^N / ||v||, which sandwiches sigma_min
  EXPECT_NEAR(rep.log_product_smallest, std::log(oracle::frozen::kSminJordanHalf60), 1e-6);
}

TEST(Sandwich, IidUniform) {
  auto d = sample_diagonal(DiagonalLaw::uniform(-2.0, 2.0), 200, 21);
  for (auto& x : d) x -= 0.3;
  // E log|u - 0.3| < 0, so the negative-beta regime with p = E|u - 0.3|
  const double p = (2.3 * 2.3 + 1.7 * 1.7) / 8.0;
  const auto rep = theorem31_check(d, iid_partition(d, 0.25, -1.0, p));
  EXPECT_TRUE(rep.pass) << rep.diagnostics;
}

TEST(Sandwich, LinearProfile) {
  const std::size_t n = 200;
  const Complex z(0.0, 0.2);
  auto g = [z](double t) { return -1.0 + 2.0 * t - z; };
  std::vector<Complex> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = g(static_cast<double>(i + 1) / static_cast<double>(n));
  const auto rep = theorem31_check(d, holder_partition(g, n, 0.25));
  EXPECT_TRUE(rep.pass) << rep.diagnostics;
  EXPECT_GE(rep.sigma_nl, rep.dfrak_inv);
}

TEST(Sandwich, UpperBoundOnRandomPartitions) {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const auto d = random_diagonal(80, seed, 1.2);
    CounterRng rng(seed, 9);
    std::vector<std::size_t> pts;
    for (int k = 0; k < 6; ++k) pts.push_back(1 + static_cast<std::size_t>(rng.uniform() * 79));
    const auto rep = theorem31_check(d, BlockPartition::from_points(pts, 80));
    EXPECT_TRUE(rep.upper_ok) << rep.diagnostics;
    EXPECT_TRUE(rep.sigma_ok) << rep.diagnostics;
  }
}

TEST(Sandwich, SizeLimit) {
  const std::vector<Complex> d(401, 1.0);
  EXPECT_THROW(theorem31_check(d, BlockPartition::single(401)), std::invalid_argument);
}

TEST(FrameProduct, Identity) {
  for (std::size_t k : {1u, 3u, 5u}) {
    const auto r = frame_product_infimum(CMatrix::identity(5), k, 20, 1);
    EXPECT_NEAR(r.infimum, 1.0, 1e-12);
    EXPECT_NEAR(r.singular_frame, 1.0, 1e-12);
  }
}

TEST(FrameProduct, Diagonal) {
  CMatrix a(3, 3);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  a(2, 2) = 3.0;
  const auto r = frame_product_infimum(a, 2, 50, 2);
  EXPECT_NEAR(r.singular_frame, 2.0, 1e-12);
  EXPECT_NEAR(r.infimum, 2.0, 1e-12);
  EXPECT_NEAR(r.sigma_product, 2.0, 1e-12);
}

TEST(FrameProduct, RandomMatrixNeverBeatsSingularValues) {
  const auto a = testing_support::random_matrix(15, 77);
  const auto r = frame_product_infimum(a, 4, 100, 3);
  EXPECT_EQ(r.trials, 101u);
  EXPECT_GE(r.infimum, r.sigma_product * (1.0 - 1e-10));
  EXPECT_NEAR(r.singular_frame, r.sigma_product, 1e-8 * r.sigma_product);
}

TEST(FrameProduct, Errors) {
  EXPECT_THROW(frame_product_infimum(CMatrix::identity(3), 0, 1, 1), std::invalid_argument);
  EXPECT_THROW(frame_product_infimum(CMatrix::identity(3), 4, 1, 1), std::invalid_argument);
  EXPECT_THROW(frame_product_infimum(CMatrix::identity(3), 1, 0, 1), std::invalid_argument);
}
