#pragma once

// Small singular values of bidiagonal D + J: partial diagonal products,
// block witness vectors, the block constants D+ / D-, partitions built from
// a realized diagonal, and a two-sided check of the product of the L smallest
// singular values against the witness products.
//
// Indices in this header are 1-based, matching the block notation
// 0 = i_1 < i_2 < ... < i_{L+1} = N where block j holds rows i_j + 1 .. i_{j+1}.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace nnspec {

/// A complex number stored as log-modulus and unit phase.
struct LogComplex {
  double log_abs = 0.0;
  Complex phase{1.0, 0.0};

  double abs() const { return std::exp(log_abs); }
  Complex value() const { return log_abs == kNegInf ? Complex{} : std::exp(log_abs) * phase; }
};

/// prod_{i <= l < j} d_l for 1 <= i <= j <= N + 1 (empty product = 1).
inline LogComplex dprod(std::span<const Complex> d, std::size_t i, std::size_t j) {
  if (i < 1 || i > j || j > d.size() + 1) throw std::out_of_range("dprod: need 1 <= i <= j <= N + 1");
  LogComplex p;
  for (std::size_t l = i; l < j; ++l) {
    const Complex x = d[l - 1];
    if (x == Complex{}) return {kNegInf, Complex{}};
    p.log_abs += std::log(std::abs(x));
    p.phase *= x / std::abs(x);
  }
  p.phase = unit_phase(p.phase);
  return p;
}

struct BlockPartition {
  std::vector<std::size_t> boundaries{0};  // 0 = i_1 < ... < i_{L+1} = N
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return boundaries.empty() ? 0 : boundaries.back(); }
  std::size_t blocks() const noexcept { return boundaries.size() - 1; }
  /// First and last (1-based) rows of block j (0-based j).
  std::size_t first(std::size_t j) const { return boundaries[j] + 1; }
  std::size_t last(std::size_t j) const { return boundaries[j + 1]; }

  static BlockPartition from_points(std::vector<std::size_t> pts, std::size_t n) {
    BlockPartition p;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    p.boundaries = {0};
    for (auto x : pts)
      if (x > 0 && x < n) p.boundaries.push_back(x);
    p.boundaries.push_back(n);
    return p;
  }
  static BlockPartition single(std::size_t n) { return from_points({}, n); }

  void validate(std::size_t n) const {
    if (boundaries.size() < 2 || boundaries.front() != 0 || boundaries.back() != n)
      throw std::invalid_argument("BlockPartition: must run from 0 to N");
    for (std::size_t k = 1; k < boundaries.size(); ++k)
      if (boundaries[k] <= boundaries[k - 1]) throw std::invalid_argument("BlockPartition: boundaries must increase");
  }
};

/// v^{i,j} with v_k = (-1)^{k-i} D^{i,k} on i..j, and its normalization w.
/// (D + J) v is supported on {i - 1, j} with values 1 and (-1)^{j-i} D^{i,j+1}.
struct WitnessVector {
  std::size_t first = 1;  // i
  std::size_t last = 1;   // j
  std::vector<LogComplex> entries;  // v_i .. v_j
  double log_norm = 0.0;            // log ||v||_2
  std::vector<Complex> normalized;  // w = v / ||v||_2 on i..j
  LogComplex tail;                  // (-1)^{j-i} D^{i,j+1}, the entry of (D + J) v at row j

  /// log ||pi (D + J) w||_2 = log|D^{i,j+1}| - log ||v||_2.
  double log_projected_residual() const { return tail.log_abs - log_norm; }

  /// Full-length v (may overflow for huge products; intended for tests).
  std::vector<Complex> dense(std::size_t n) const {
    std::vector<Complex> v(n);
    for (std::size_t k = first; k <= last; ++k) v[k - 1] = entries[k - first].value();
    return v;
  }
  std::vector<Complex> dense_normalized(std::size_t n) const {
    std::vector<Complex> v(n);
    for (std::size_t k = first; k <= last; ++k) v[k - 1] = normalized[k - first];
    return v;
  }
};

inline WitnessVector witness_vector(std::span<const Complex> d, std::size_t i, std::size_t j) {
  if (i < 1 || i > j || j > d.size()) throw std::out_of_range("witness_vector: need 1 <= i <= j <= N");
  WitnessVector w;
  w.first = i;
  w.last = j;
  LogComplex p;  // running D^{i,k}
  double mx = 0.0;
  for (std::size_t k = i; k <= j; ++k) {
    if (k > i) {
      const Complex x = d[k - 2];
      if (x == Complex{} || p.log_abs == kNegInf)
        p = {kNegInf, Complex{}};
      else {
        p.log_abs += std::log(std::abs(x));
        p.phase = unit_phase(-p.phase * (x / std::abs(x)));
      }
    }
    w.entries.push_back(p);
    mx = std::max(mx, p.log_abs);
  }
  double s = 0.0;
  for (const auto& e : w.entries)
    if (e.log_abs != kNegInf) s += std::exp(2.0 * (e.log_abs - mx));
  w.log_norm = mx + 0.5 * std::log(s);
  for (const auto& e : w.entries)
    w.normalized.push_back(e.log_abs == kNegInf ? Complex{} : std::exp(e.log_abs - w.log_norm) * e.phase);
  const Complex x = d[j - 1];
  const LogComplex& pj = w.entries.back();
  if (x == Complex{} || pj.log_abs == kNegInf)
    w.tail = {kNegInf, Complex{}};
  else
    w.tail = {pj.log_abs + std::log(std::abs(x)), unit_phase(pj.phase * (x / std::abs(x)))};
  return w;
}

inline std::vector<WitnessVector> witness_vectors(std::span<const Complex> d, const BlockPartition& part) {
  part.validate(d.size());
  std::vector<WitnessVector> out;
  for (std::size_t j = 0; j < part.blocks(); ++j) out.push_back(witness_vector(d, part.first(j), part.last(j)));
  return out;
}

struct DBounds {
  std::vector<double> plus;   // D+ per block
  std::vector<double> minus;  // D- per block (+inf when a range crosses a zero d)
  double dfrak = 1.0;         // max_j min(D+, D-)
};

/// D+ = max_{s <= r} sum_{p=s}^r (|D^{p,r}| + |D^{s,p}|), D- likewise with
/// reciprocals, over i_j < s <= r <= i_{j+1}; O(b^2) per block by recurrences.
inline DBounds d_bounds(std::span<const Complex> d, const BlockPartition& part) {
  part.validate(d.size());
  DBounds out;
  out.dfrak = 0.0;
  for (std::size_t j = 0; j < part.blocks(); ++j) {
    const std::size_t lo = part.first(j), hi = part.last(j);
    double best_plus = 0.0, best_minus = 0.0;
    for (std::size_t s = lo; s <= hi; ++s) {
      // fwd = sum_{p=s}^r |D^{s,p}|, bwd = sum_{p=s}^r |D^{p,r}|; cur = |D^{s,r}|
      double fwd = 1.0, bwd = 1.0, cur = 1.0;
      double fwd_inv = 1.0, bwd_inv = 1.0, cur_inv = 1.0;
      best_plus = std::max(best_plus, fwd + bwd);
      best_minus = std::max(best_minus, fwd_inv + bwd_inv);
      for (std::size_t r = s + 1; r <= hi; ++r) {
        const double a = std::abs(d[r - 2]);  // d_{r-1}
        cur *= a;
        fwd += cur;
        bwd = a * bwd + 1.0;
        cur_inv = a == 0.0 ? kInf : cur_inv / a;
        fwd_inv += cur_inv;
        bwd_inv = a == 0.0 ? kInf : bwd_inv / a + 1.0;
        best_plus = std::max(best_plus, fwd + bwd);
        best_minus = std::max(best_minus, fwd_inv + bwd_inv);
      }
    }
    out.plus.push_back(best_plus);
    out.minus.push_back(best_minus);
    out.dfrak = std::max(out.dfrak, std::min(best_plus, best_minus));
  }
  return out;
}

/// Partition for an i.i.d. diagonal: the regular grid floor(N^delta k) plus
/// x and x + 1 for every x in G, where x is in G when some window product of
/// |d_i|^{-beta} / p_beta containing x reaches N^{2 delta}. A negative beta
/// selects the regime E log|d| < 0 (factors |d_i|^{|beta|} / p_beta).
/// Windows are capped at ceil(N^delta log N) entries.
inline BlockPartition iid_partition(std::span<const Complex> d, double delta, double beta, double p_beta) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("iid_partition: empty diagonal");
  if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("iid_partition: delta must lie in (0, 1/2)");
  if (beta == 0.0 || !(p_beta > 0.0)) throw std::invalid_argument("iid_partition: need beta != 0 and p_beta > 0");
  if (n < 2) return BlockPartition::single(n);
  const double dn = static_cast<double>(n);
  const double target = 2.0 * delta * std::log(dn);
  const auto window = static_cast<std::size_t>(std::ceil(std::pow(dn, delta) * std::log(dn)));
  std::vector<double> lf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::abs(d[i]);
    lf[i] = (a == 0.0 ? (beta > 0 ? kInf : kNegInf) : -beta * std::log(a)) - std::log(p_beta);
  }
  std::vector<std::size_t> pts;
  for (std::size_t k = 1; k <= static_cast<std::size_t>(std::floor(std::pow(dn, 1.0 - delta))); ++k)
    pts.push_back(static_cast<std::size_t>(std::floor(std::pow(dn, delta) * static_cast<double>(k))));
  for (std::size_t j = 0; j < n; ++j) {
    bool bad = false;
    double s = 0.0;
    for (std::size_t k = j; k < n && k < j + window && !bad; ++k) {
      s += lf[k];
      bad = s >= target;
    }
    s = 0.0;
    for (std::size_t k = j + 1; k-- > 0 && k + window > j && !bad;) {
      s += lf[k];
      bad = s >= target;
    }
    if (bad) {
      pts.push_back(j + 1);
      pts.push_back(j + 2);
    }
  }
  return BlockPartition::from_points(std::move(pts), n);
}

/// Partition for a profile d_i = f(i/N): sign-crossing points a_j of
/// log|f(k/N)| against +-N^{-delta}, merged with the regular grid.
inline BlockPartition holder_partition(const std::function<Complex(double)>& f, std::size_t n, double delta) {
  if (n == 0) throw std::invalid_argument("holder_partition: need N >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("holder_partition: delta must lie in (0, 1)");
  const double dn = static_cast<double>(n);
  std::vector<double> lg(n + 1);
  bool all_zero = true;
  for (std::size_t k = 1; k <= n; ++k) {
    const double a = std::abs(f(static_cast<double>(k) / dn));
    all_zero = all_zero && a == 0.0;
    lg[k] = a == 0.0 ? kNegInf : std::log(a);
  }
  std::vector<std::size_t> pts;
  for (std::size_t k = 1; k <= static_cast<std::size_t>(std::floor(std::pow(dn, 1.0 - delta))); ++k)
    pts.push_back(static_cast<std::size_t>(std::floor(std::pow(dn, delta) * static_cast<double>(k))));
  if (all_zero) {
    auto p = BlockPartition::from_points(std::move(pts), n);
    p.warnings.emplace_back("holder_partition: profile vanishes identically; using the regular grid only");
    return p;
  }
  const double tol = std::pow(dn, -delta);
  std::size_t a = 1;
  pts.push_back(a);
  while (a < n) {
    const bool below = lg[a] < 0.0;
    std::size_t next = 0;
    for (std::size_t k = a + 1; k <= n; ++k) {
      if (below ? lg[k] > tol : lg[k] < -tol) {
        next = k;
        break;
      }
    }
    if (next == 0) break;
    pts.push_back(next);
    a = next;
  }
  return BlockPartition::from_points(std::move(pts), n);
}

inline BlockPartition holder_partition(const Generator& f, std::size_t n, double delta) {
  return holder_partition([&](double x) { return f(x); }, n, delta);
}

struct Theorem31Report {
  std::size_t n = 0;
  std::size_t blocks = 0;        // L
  double sigma_nl = kInf;        // (L+1)-st smallest singular value (+inf when L = N)
  double dfrak = 1.0;
  double dfrak_inv = 1.0;
  double norm = 0.0;             // ||D + J||
  double log_lower = 0.0;        // -L log(8 (||M|| v 1) D sqrt L) + log prod ||pi_k M w^k||
  double log_product_witness = 0.0;
  double log_product_smallest = 0.0;  // log of the product of the L smallest singular values
  bool sigma_ok = false;
  bool lower_ok = false;
  bool upper_ok = false;
  bool pass = false;
  std::string diagnostics;
};

inline constexpr double kSandwichConstant = 8.0;

/// Exact singular values of D + J against the block witness bounds.
inline Theorem31Report theorem31_check(std::span<const Complex> d, const BlockPartition& part) {
  const std::size_t n = d.size();
  if (n == 0 || n > 400) throw std::invalid_argument("theorem31_check: need 1 <= N <= 400");
  part.validate(n);
  Theorem31Report rep;
  rep.n = n;
  rep.blocks = part.blocks();
  const std::size_t l = rep.blocks;
  const auto m = build_bidiagonal(d);
  auto sv = linalg::singular_values(m);
  if (!sv.converged) throw Error("theorem31_check: singular values did not converge");
  std::vector<double> asc(sv.values.rbegin(), sv.values.rend());
  rep.norm = sv.values.front();
  const auto db = d_bounds(d, part);
  rep.dfrak = db.dfrak;
  rep.dfrak_inv = 1.0 / db.dfrak;
  if (l < n) rep.sigma_nl = asc[l];
  for (const auto& w : witness_vectors(d, part)) rep.log_product_witness += w.log_projected_residual();
  for (std::size_t k = 0; k < l; ++k) rep.log_product_smallest += std::log(asc[k]);
  const double dl = static_cast<double>(l);
  rep.log_lower = -dl * std::log(kSandwichConstant * std::max(rep.norm, 1.0) * rep.dfrak * std::sqrt(dl)) +
                  rep.log_product_witness;
  rep.sigma_ok = rep.sigma_nl >= rep.dfrak_inv * (1.0 - 1e-10);
  rep.upper_ok = rep.log_product_smallest <= rep.log_product_witness + std::log1p(1e-8);
  rep.lower_ok = rep.log_lower <= rep.log_product_smallest + 1e-9 * (1.0 + std::abs(rep.log_product_smallest));
  rep.pass = rep.sigma_ok && rep.upper_ok && rep.lower_ok;
  if (!rep.pass) {
    rep.diagnostics = "N=" + std::to_string(n) + " L=" + std::to_string(l) + " sigma_NL=" + std::to_string(rep.sigma_nl) +
                      " Dinv=" + std::to_string(rep.dfrak_inv) + " lower=" + std::to_string(rep.log_lower) +
                      " smallest=" + std::to_string(rep.log_product_smallest) +
                      " witness=" + std::to_string(rep.log_product_witness);
  }
  return rep;
}

struct FrameProductResult {
  double infimum = kInf;           // min over trials of prod ||A xi_k||
  double singular_frame = kInf;    // value at the exact right-singular frame
  double sigma_product = 0.0;      // product of the k smallest singular values
  std::size_t trials = 0;
};

/// min over orthonormal k-frames of prod_k ||A xi_k||_2: trial 0 is the frame
/// of right singular vectors for the k smallest singular values, followed by
/// `trials` Haar-random frames.
inline FrameProductResult frame_product_infimum(const CMatrix& a, std::size_t k, std::size_t trials, std::uint64_t seed) {
  a.require_square("frame_product_infimum");
  const std::size_t n = a.rows();
  if (k < 1 || k > n) throw std::invalid_argument("frame_product_infimum: need 1 <= k <= N");
  if (trials < 1) throw std::invalid_argument("frame_product_infimum: need trials >= 1");
  FrameProductResult out;
  const auto svd = linalg::jacobi_svd(a);
  double ls = 0.0;
  for (std::size_t q = n - k; q < n; ++q) ls += std::log(svd.values[q]);
  out.sigma_product = std::exp(ls);
  auto product = [&](const CMatrix& frame) {
    const auto af = a * frame;
    double s = 0.0;
    std::vector<Complex> col(n);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t r = 0; r < n; ++r) col[r] = af(r, c);
      s += std::log(norm2(col));
    }
    return std::exp(s);
  };
  CMatrix sf(n, k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t r = 0; r < n; ++r) sf(r, c) = svd.v(r, n - k + c);
  out.singular_frame = product(sf);
  out.infimum = out.singular_frame;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto frame = sample_haar_frame(n, k, seed, t, streams::kFrames);
    out.infimum = std::min(out.infimum, product(frame));
  }
  out.trials = trials + 1;
  return out;
}

}  // namespace nnspec
