#pragma once

// Transfer matrices of the banded recurrence ((M - z) u)_m = 0, Lyapunov
// spectra of their products, and the bad-z detector for regularized models.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "limitlaw.hpp"
#include "linalg.hpp"
#include "models.hpp"

namespace nnspec {

struct TransferMatrix {
  CMatrix matrix;
  std::size_t block = 0;
  Complex z{};
};

/// Top row ((-t_{d-1}, ..., -t_1, z - t_0) / t_d), identity on the
/// subdiagonal; d is the effective degree of the block coefficients t.
inline TransferMatrix transfer_matrix(std::span<const Complex> t, Complex z, std::size_t block = 0) {
  const auto p = SymbolAtX::from_coefficients(t, z);
  if (p.effective_degree == 0) throw std::invalid_argument("transfer_matrix: leading coefficient vanishes (degree 0)");
  return {companion(p), block, z};
}

/// v = (lambda^{d-1}, ..., lambda, 1), an eigenvector of the transfer matrix
/// for each root lambda of the symbol.
inline std::vector<Complex> transfer_eigenvector(Complex lambda, std::size_t d) {
  std::vector<Complex> v(d);
  Complex pw = 1.0;
  for (std::size_t k = d; k-- > 0;) {
    v[k] = pw;
    pw *= lambda;
  }
  return v;
}

class SingularTransfer : public Error {
 public:
  explicit SingularTransfer(std::size_t index)
      : Error("lyapunov_spectrum: singular matrix at step " + std::to_string(index)), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

struct LyapunovSpectrum {
  std::vector<double> exponents;        // descending
  std::vector<double> standard_errors;  // jackknife over segment averages, matching `exponents`
  std::size_t length = 0;
};

/// Exponents of the product T_length ... T_1 by QR renormalization at every
/// step. `next(k)` returns T_{k+1} for k = 0..length-1.
inline LyapunovSpectrum lyapunov_spectrum(const std::function<CMatrix(std::size_t)>& next, std::size_t length,
                                          std::size_t segments = 10) {
  if (length == 0) throw std::invalid_argument("lyapunov_spectrum: need length >= 1");
  CMatrix t0 = next(0);
  t0.require_square("lyapunov_spectrum");
  const std::size_t d = t0.rows();
  segments = std::max<std::size_t>(1, std::min(segments, length));
  std::vector<std::vector<double>> seg_sum(segments, std::vector<double>(d, 0.0));
  std::vector<std::size_t> seg_len(segments, 0);
  std::vector<double> total(d, 0.0);
  CMatrix q = CMatrix::identity(d);
  for (std::size_t k = 0; k < length; ++k) {
    CMatrix t = k == 0 ? std::move(t0) : next(k);
    if (linalg::LuFactor(t).singular()) throw SingularTransfer(k);
    auto f = linalg::qr(t * q);
    const std::size_t s = k * segments / length;
    for (std::size_t j = 0; j < d; ++j) {
      const double a = std::abs(f.r(j, j));
      if (a == 0.0) throw SingularTransfer(k);
      const double lg = std::log(a);
      total[j] += lg;
      seg_sum[s][j] += lg;
    }
    ++seg_len[s];
    q = std::move(f.q);
  }
  LyapunovSpectrum out;
  out.length = length;
  std::vector<double> mu(d), se(d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < d; ++j) {
    mu[j] = total[j] / static_cast<double>(length);
    if (segments >= 2) {
      // leave-one-segment-out estimates
      std::vector<double> loo(segments);
      double mean = 0.0;
      for (std::size_t s = 0; s < segments; ++s) {
        loo[s] = (total[j] - seg_sum[s][j]) / static_cast<double>(length - seg_len[s]);
        mean += loo[s];
      }
      mean /= static_cast<double>(segments);
      double v = 0.0;
      for (double x : loo) v += (x - mean) * (x - mean);
      se[j] = std::sqrt(v * static_cast<double>(segments - 1) / static_cast<double>(segments));
    }
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mu[a] > mu[b]; });
  for (auto j : order) {
    out.exponents.push_back(mu[j]);
    out.standard_errors.push_back(se[j]);
  }
  return out;
}

/// sum (mu_i v 0) + log|a_top| from the Lyapunov spectrum of the constant
/// transfer sequence; log|a_0 - z| when the symbol has degree 0.
inline double thouless_logpot(std::span<const Complex> a, Complex z, std::size_t length = 10000) {
  const auto p = SymbolAtX::from_coefficients(a, z);
  if (p.effective_degree == 0) {
    const double v = std::abs(p.coeffs[0]);
    return v == 0.0 ? kNegInf : std::log(v);
  }
  const auto tm = transfer_matrix(a, z);
  const auto spec = lyapunov_spectrum([&](std::size_t) { return tm.matrix; }, length);
  double s = std::log(std::abs(p.leading()));
  for (double mu : spec.exponents) s += std::max(mu, 0.0);
  return s;
}

struct BadZBlock {
  std::size_t block = 0;
  std::size_t degree = 0;
  double vandermonde_lhs = kInf;  // |t_top|^{d-1} |det V|^2
  double ring_distance = kInf;    // min over roots of ||lambda| - 1|
  bool discriminant_small = false;
  bool root_near_circle = false;
};

struct BadZReport {
  bool flagged = false;
  bool discriminant_small = false;
  bool root_near_circle = false;
  double discriminant_threshold = 0.0;  // N^{-2 delta1 d}
  double ring_halfwidth = 0.0;          // N^{-3 delta1}
  std::vector<BadZBlock> blocks;

  std::vector<std::string> reasons() const {
    std::vector<std::string> r;
    if (discriminant_small) r.emplace_back("discriminant-small");
    if (root_near_circle) r.emplace_back("root-near-circle");
    return r;
  }
};

/// Flags z when some block with positive effective degree has
/// (i) |t_top|^{d-1} |det V|^2 <= N^{-2 delta1 d}, V the Vandermonde of the
/// roots, or (ii) a root with modulus in [1 - N^{-3 delta1}, 1 + N^{-3 delta1}].
inline BadZReport bad_z_check(const RegularizedModel& model, Complex z, std::size_t n, double delta1) {
  BadZReport rep;
  const double dn = static_cast<double>(n);
  const std::size_t band = model.coeffs.empty() ? 0 : model.coeffs.front().size() - 1;
  rep.discriminant_threshold = std::pow(dn, -2.0 * delta1 * static_cast<double>(band));
  rep.ring_halfwidth = std::pow(dn, -3.0 * delta1);
  for (std::size_t k = 0; k < model.blocks(); ++k) {
    const auto p = SymbolAtX::from_coefficients(model.coeffs[k], z);
    if (p.effective_degree == 0) continue;
    BadZBlock b;
    b.block = k;
    b.degree = p.effective_degree;
    const auto roots = symbol_roots(p);
    // |det V| = prod_{i<j} |lambda_i - lambda_j|, accumulated in logs
    double log_det_v = 0.0;
    for (std::size_t i = 0; i < roots.size(); ++i)
      for (std::size_t j = i + 1; j < roots.size(); ++j) log_det_v += std::log(std::abs(roots[i] - roots[j]));
    const double log_lhs = static_cast<double>(b.degree - 1) * std::log(std::abs(p.leading())) + 2.0 * log_det_v;
    b.vandermonde_lhs = std::exp(log_lhs);
    b.discriminant_small = log_lhs <= std::log(rep.discriminant_threshold);
    for (auto r : roots) b.ring_distance = std::min(b.ring_distance, std::abs(std::abs(r) - 1.0));
    b.root_near_circle = b.ring_distance <= rep.ring_halfwidth;
    rep.discriminant_small = rep.discriminant_small || b.discriminant_small;
    rep.root_near_circle = rep.root_near_circle || b.root_near_circle;
    rep.blocks.push_back(b);
  }
  rep.flagged = rep.discriminant_small || rep.root_near_circle;
  return rep;
}

}  // namespace nnspec
