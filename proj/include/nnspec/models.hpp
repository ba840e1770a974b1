#pragma once

// Matrix families: banded upper-triangular Toeplitz, twisted Toeplitz with
// slowly varying diagonals, their block-regularized versions, bidiagonal
// D + J models, and the complex Ginibre perturbation.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace nnspec {

/// A function [0,1] -> C from a small set of built-in families.
class Generator {
 public:
  enum class Kind { Constant, Affine, Polynomial, Tabulated };

  Generator() : Generator(constant(0.0)) {}

  static Generator constant(Complex c) { return Generator(Kind::Constant, {c}); }
  /// a + b x
  static Generator affine(Complex a, Complex b) { return Generator(Kind::Affine, {a, b}); }
  /// sum_k c[k] x^k
  static Generator polynomial(std::vector<Complex> c) {
    if (c.empty()) c.push_back(0.0);
    return Generator(Kind::Polynomial, std::move(c));
  }
  /// Values at equally spaced nodes 0, 1/(m-1), ..., 1; linear in between,
  /// x clamped to [0,1].
  static Generator tabulated(std::vector<Complex> values) {
    if (values.empty()) throw std::invalid_argument("Generator::tabulated: empty table");
    return Generator(Kind::Tabulated, std::move(values));
  }

  Complex operator()(double x) const {
    switch (kind_) {
      case Kind::Constant:
        return p_[0];
      case Kind::Affine:
        return p_[0] + p_[1] * x;
      case Kind::Polynomial: {
        Complex s{};
        for (std::size_t k = p_.size(); k-- > 0;) s = s * x + p_[k];
        return s;
      }
      case Kind::Tabulated: {
        if (p_.size() == 1) return p_[0];
        const double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(p_.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(t), p_.size() - 2);
        const double w = t - static_cast<double>(k);
        return (1.0 - w) * p_[k] + w * p_[k + 1];
      }
    }
    return {};
  }

  Kind kind() const noexcept { return kind_; }
  std::span<const Complex> params() const noexcept { return p_; }

  bool is_constant() const noexcept {
    if (kind_ == Kind::Constant) return true;
    return std::all_of(p_.begin() + (kind_ == Kind::Tabulated ? 0 : 1), p_.end(), [&](Complex c) {
      return kind_ == Kind::Tabulated ? c == p_[0] : c == Complex{};
    });
  }
  bool is_zero() const noexcept {
    return std::all_of(p_.begin(), p_.end(), [](Complex c) { return c == Complex{}; });
  }

  friend bool operator==(const Generator&, const Generator&) = default;

 private:
  Generator(Kind k, std::vector<Complex> p) : kind_(k), p_(std::move(p)) {}
  Kind kind_;
  std::vector<Complex> p_;
};

/// Diagonal generators f_0..f_d; entry (i, i+l) of the N x N matrix is f_l(i/N).
struct TwistedSymbol {
  std::vector<Generator> generators;

  static TwistedSymbol constant(std::span<const Complex> a) {
    TwistedSymbol s;
    for (auto c : a) s.generators.push_back(Generator::constant(c));
    return s;
  }
  static TwistedSymbol constant(std::initializer_list<Complex> a) {
    return constant(std::span<const Complex>(a.begin(), a.size()));
  }

  std::size_t band() const {
    if (generators.empty()) throw std::invalid_argument("TwistedSymbol: no generators");
    return generators.size() - 1;
  }
  bool is_constant() const {
    return std::all_of(generators.begin(), generators.end(), [](const Generator& g) { return g.is_constant(); });
  }
  std::vector<Complex> coefficients_at(double x) const {
    std::vector<Complex> c(generators.size());
    for (std::size_t l = 0; l < c.size(); ++l) c[l] = generators[l](x);
    return c;
  }
  /// Coefficients of a constant symbol.
  std::vector<Complex> constant_coefficients() const {
    if (!is_constant()) throw std::invalid_argument("TwistedSymbol: symbol is not constant");
    return coefficients_at(0.0);
  }
};

class DiagonalLaw {
 public:
  enum class Kind { UniformInterval, Discrete, Profile };

  /// Uniform on the segment [lo, hi] of the complex plane.
  static DiagonalLaw uniform(Complex lo, Complex hi) {
    if (lo == hi) throw std::invalid_argument("DiagonalLaw: degenerate interval");
    DiagonalLaw d(Kind::UniformInterval);
    d.points_ = {lo, hi};
    return d;
  }
  static DiagonalLaw discrete(std::vector<Complex> points, std::vector<double> weights) {
    if (points.empty() || points.size() != weights.size())
      throw std::invalid_argument("DiagonalLaw: points and weights must be non-empty and equal length");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("DiagonalLaw: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("DiagonalLaw: weights must sum to 1");
    DiagonalLaw d(Kind::Discrete);
    d.points_ = std::move(points);
    d.weights_ = std::move(weights);
    return d;
  }
  /// Deterministic d_i = f(i/N).
  static DiagonalLaw profile(Generator f) {
    DiagonalLaw d(Kind::Profile);
    d.profile_ = std::move(f);
    return d;
  }

  Kind kind() const noexcept { return kind_; }
  Complex lo() const { return points_.at(0); }
  Complex hi() const { return points_.at(1); }
  std::span<const Complex> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  const Generator& profile_fn() const noexcept { return profile_; }

 private:
  explicit DiagonalLaw(Kind k) : kind_(k) {}
  Kind kind_;
  std::vector<Complex> points_;
  std::vector<double> weights_;
  Generator profile_;
};

struct NoiseSpec {
  double gamma = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(gamma > 0.5) || !std::isfinite(gamma)) throw std::invalid_argument("noise: gamma must be a finite real > 1/2");
  }
};

struct RegularizationParams {
  double delta1 = 0.01;
  double delta2 = 0.01;
  double delta3 = 0.05;

  void validate(double gamma, std::size_t band) const {
    for (double d : {delta1, delta2, delta3})
      if (!(d > 0.0 && d < 0.5)) throw std::invalid_argument("regularization: deltas must lie in (0, 1/2)");
    if (band > 0) {
      const double cap = (gamma - 0.5) / (20.0 * static_cast<double>(band * band));
      if (std::max({delta1, delta2, delta3}) > cap)
        throw std::invalid_argument("regularization: max delta exceeds (gamma - 1/2)/(20 d^2) = " + std::to_string(cap));
    }
    if (!(delta1 < delta3 / 4.0)) throw std::invalid_argument("regularization: need delta1 < delta3/4");
  }
};

/// Piecewise-constant banded model: rows [start[k], start[k+1]) share the
/// coefficient vector coeffs[k] (index l = diagonal offset).
struct RegularizedModel {
  std::size_t n = 0;
  std::vector<std::size_t> start;  // block starts (0-based rows) followed by n
  std::vector<std::vector<Complex>> coeffs;

  std::size_t blocks() const noexcept { return coeffs.size(); }
  std::size_t block_length(std::size_t k) const { return start[k + 1] - start[k]; }

  CMatrix matrix() const {
    CMatrix m(n, n);
    for (std::size_t k = 0; k < blocks(); ++k)
      for (std::size_t i = start[k]; i < start[k + 1]; ++i)
        for (std::size_t l = 0; l < coeffs[k].size() && i + l < n; ++l) m(i, i + l) = coeffs[k][l];
    return m;
  }
};

inline CMatrix build_banded_toeplitz(std::span<const Complex> a, std::size_t n) {
  if (a.empty()) throw std::invalid_argument("build_banded_toeplitz: empty coefficients");
  if (n <= a.size() - 1) throw std::invalid_argument("build_banded_toeplitz: need N > band width");
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < a.size() && i + l < n; ++l) m(i, i + l) = a[l];
  return m;
}

inline CMatrix build_banded_toeplitz(const TwistedSymbol& sym, std::size_t n) {
  return build_banded_toeplitz(sym.constant_coefficients(), n);
}

inline CMatrix build_twisted(const TwistedSymbol& sym, std::size_t n) {
  const std::size_t d = sym.band();
  if (n <= d) throw std::invalid_argument("build_twisted: need N > band width");
  CMatrix m(n, n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) / dn;
    for (std::size_t l = 0; l <= d && i + l < n; ++l) m(i, i + l) = sym.generators[l](x);
  }
  return m;
}

/// Block index of row i (1-based): floor(i N^{delta1 - 1}).
inline std::size_t regularized_block_of(std::size_t i, std::size_t n, double delta1) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(i) * std::pow(static_cast<double>(n), delta1 - 1.0)));
}

inline RegularizedModel regularize(const TwistedSymbol& sym, std::size_t n, const RegularizationParams& p) {
  const std::size_t d = sym.band();
  if (n <= d) throw std::invalid_argument("build_regularized: need N > band width");
  const double dn = static_cast<double>(n);
  const double scale = std::pow(dn, p.delta1);
  const double floor_mod = std::pow(dn, -p.delta2);

  RegularizedModel out;
  out.n = n;
  std::vector<std::size_t> block_id(n);
  for (std::size_t i = 1; i <= n; ++i) block_id[i - 1] = regularized_block_of(i, n, p.delta1);
  for (std::size_t r = 0; r < n; ++r) {
    if (r == 0 || block_id[r] != block_id[r - 1]) {
      out.start.push_back(r);
      const double x = static_cast<double>(block_id[r]) / scale;
      auto c = sym.coefficients_at(x);
      for (auto& v : c)
        if (std::abs(v) < floor_mod) v = 0.0;
      out.coeffs.push_back(std::move(c));
    }
  }
  out.start.push_back(n);

  if (out.blocks() >= 2) {
    const std::size_t a = out.blocks() - 2, b = out.blocks() - 1;
    const double la = static_cast<double>(out.block_length(a));
    const double lb = static_cast<double>(out.block_length(b));
    const double w = lb / (la + lb);
    for (std::size_t l = 0; l <= d; ++l) out.coeffs[a][l] += w * (out.coeffs[b][l] - out.coeffs[a][l]);
    out.coeffs.pop_back();
    out.start.erase(out.start.end() - 2);
  }
  return out;
}

inline CMatrix build_regularized(const TwistedSymbol& sym, std::size_t n, const RegularizationParams& p) {
  return regularize(sym, n, p).matrix();
}

/// Validating overload: parameters are checked against the gamma used downstream.
inline CMatrix build_regularized(const TwistedSymbol& sym, std::size_t n, const RegularizationParams& p, double gamma) {
  p.validate(gamma, sym.band());
  return build_regularized(sym, n, p);
}

/// D + J with D = diag(d).
inline CMatrix build_bidiagonal(std::span<const Complex> d) {
  if (d.empty()) throw std::invalid_argument("build_bidiagonal: need N >= 1");
  const std::size_t n = d.size();
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = d[i];
    if (i + 1 < n) m(i, i + 1) = 1.0;
  }
  return m;
}

inline CMatrix jordan_block(std::size_t n, Complex z) {
  return build_bidiagonal(std::vector<Complex>(n, z));
}

inline std::vector<Complex> sample_diagonal(const DiagonalLaw& law, std::size_t n, std::uint64_t seed) {
  std::vector<Complex> d(n);
  const CounterRng rng(seed, streams::kDiagonal);
  switch (law.kind()) {
    case DiagonalLaw::Kind::UniformInterval:
      for (std::size_t i = 0; i < n; ++i) d[i] = law.lo() + rng.uniform_at(i) * (law.hi() - law.lo());
      break;
    case DiagonalLaw::Kind::Discrete: {
      std::vector<double> cdf(law.weights().size());
      std::partial_sum(law.weights().begin(), law.weights().end(), cdf.begin());
      for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform_at(i) * cdf.back();
        auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        d[i] = law.points()[std::min(k, cdf.size() - 1)];
      }
      break;
    }
    case DiagonalLaw::Kind::Profile:
      for (std::size_t i = 0; i < n; ++i) d[i] = law.profile_fn()(static_cast<double>(i + 1) / static_cast<double>(n));
      break;
  }
  return d;
}

/// Entries are standard complex Gaussians (Re, Im independent N(0, 1/2));
/// entry (i, j) depends only on (seed, i, j).
inline CMatrix sample_ginibre(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_ginibre: need N >= 1");
  CMatrix g(n, n);
  const CounterRng rng(seed, streams::kGinibre);
  auto data = g.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = rng.complex_gaussian_at(2 * k);
  return g;
}

/// M + N^{-gamma} G with G = sample_ginibre(N, seed).
inline CMatrix perturb(const CMatrix& m, const NoiseSpec& noise) {
  m.require_square("perturb");
  noise.validate();
  const std::size_t n = m.rows();
  const double s = std::pow(static_cast<double>(n), -noise.gamma);
  CMatrix out = m;
  const CounterRng rng(noise.seed, streams::kGinibre);
  auto data = out.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] += s * rng.complex_gaussian_at(2 * k);
  return out;
}

/// Haar-distributed n x k matrix with orthonormal columns (QR of a Ginibre
/// sample with the phases of diag R removed).
inline CMatrix sample_haar_frame(std::size_t n, std::size_t k, std::uint64_t seed, std::uint64_t task = 0,
                                 std::uint64_t stream = streams::kHaar) {
  CounterRng rng(seed, stream, task);
  CMatrix g(n, k);
  for (auto& x : g.data()) x = rng.complex_gaussian();
  auto f = linalg::qr(g);
  for (std::size_t j = 0; j < k; ++j) {
    const Complex ph = unit_phase(f.r(j, j));
    for (std::size_t i = 0; i < n; ++i) f.q(i, j) *= ph;
  }
  return f.q;
}

inline CMatrix sample_haar_unitary(std::size_t n, std::uint64_t seed, std::uint64_t task = 0) {
  return sample_haar_frame(n, n, seed, task);
}

}  // namespace nnspec
