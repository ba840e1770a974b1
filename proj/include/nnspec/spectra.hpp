#pragma once

// Empirical spectral measures, log potentials, pseudospectrum grids and
// sample-to-sample comparison of planar measures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

namespace nnspec {

struct SpectrumSample {
  std::vector<Complex> points;
  std::size_t n = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string model;
  bool converged = true;
};

struct SpectrumMeta {
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string model;
};

inline SpectrumSample esd(const CMatrix& m, const SpectrumMeta& meta = {}) {
  m.require_square("esd");
  auto eig = linalg::eigenvalues(m);
  if (!eig.converged) throw Error("esd: eigensolver did not converge after " + std::to_string(eig.iterations) + " sweeps");
  return {std::move(eig.values), m.rows(), meta.gamma, meta.seed, meta.model, true};
}

/// (1/N) log|det(M - z)| via LU.
inline double empirical_logpot(const CMatrix& m, Complex z) {
  m.require_square("empirical_logpot");
  return linalg::log_abs_det(m.shifted(z)) / static_cast<double>(m.rows());
}

/// Batched (1/N) log|det(M - z)|: one Hessenberg reduction, then an O(N^2)
/// elimination per point.
inline std::vector<double> empirical_logpots(const CMatrix& m, std::span<const Complex> zs) {
  m.require_square("empirical_logpots");
  const auto h = linalg::hessenberg(m);
  std::vector<double> out(zs.size());
  const double dn = static_cast<double>(m.rows());
  parallel_for(zs.size(), [&](std::size_t k) { out[k] = linalg::hessenberg_log_det(h, zs[k]).log_abs / dn; });
  return out;
}

/// (1/n) sum log|z - p_i|.
inline double sample_logpot(std::span<const Complex> pts, Complex z) {
  double s = 0.0;
  for (auto p : pts) s += std::log(std::abs(z - p));
  return s / static_cast<double>(pts.size());
}

struct GridSpec {
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
  std::size_t nx = 11, ny = 11;

  void validate() const {
    if (nx == 0 || ny == 0) throw std::invalid_argument("grid: need nx, ny >= 1");
    if ((nx > 1 && !(x1 > x0)) || (ny > 1 && !(y1 > y0))) throw std::invalid_argument("grid: ranges must increase");
  }
  double x(std::size_t i) const { return nx == 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx - 1); }
  double y(std::size_t j) const { return ny == 1 ? y0 : y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny - 1); }
};

struct GridField {
  GridSpec spec;
  std::vector<double> values;  // values[j * nx + i] at (x(i), y(j))
  std::size_t failures = 0;    // nodes recorded as NaN

  double at(std::size_t i, std::size_t j) const { return values[j * spec.nx + i]; }
};

/// sigma_min(M - z) on every grid node; each node is computed from scratch,
/// so the field does not depend on traversal order.
inline GridField pseudospectrum_grid(const CMatrix& m, const GridSpec& spec, linalg::SminMode mode = linalg::SminMode::Auto) {
  m.require_square("pseudospectrum_grid");
  spec.validate();
  GridField out;
  out.spec = spec;
  out.values.assign(spec.nx * spec.ny, 0.0);
  std::vector<char> failed(out.values.size(), 0);
  parallel_for(out.values.size(), [&](std::size_t k) {
    const std::size_t i = k % spec.nx, j = k / spec.nx;
    const Complex z{spec.x(i), spec.y(j)};
    try {
      const auto r = linalg::smallest_singular(m.shifted(z), mode);
      if (!r.converged) {
        out.values[k] = std::numeric_limits<double>::quiet_NaN();
        failed[k] = 1;
      } else {
        out.values[k] = r.value;
      }
    } catch (const std::exception&) {
      out.values[k] = std::numeric_limits<double>::quiet_NaN();
      failed[k] = 1;
    }
  });
  out.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  return out;
}

struct CompareReport {
  double logpot_rmse = 0.0;
  double logpot_max = 0.0;
  double radial_wasserstein = 0.0;
  double angular_ks = 0.0;
  double support_coverage = 1.0;
  std::size_t test_points_used = 0;
  std::vector<std::size_t> excluded;  // indices of test points within 0.1 of a sample point
};

/// Exact 1-Wasserstein distance between two empirical laws on the line.
inline double wasserstein1(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("wasserstein1: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, s = 0.0;
  while (i < a.size() && j < b.size()) {
    const double ua = static_cast<double>(i + 1) / na, ub = static_cast<double>(j + 1) / nb;
    const double next = std::min(ua, ub);
    s += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (ua <= next) ++i;
    if (ub <= next) ++j;
  }
  return s;
}

/// Two-sample Kolmogorov distance sup |F_a - F_b|.
inline double kolmogorov(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("kolmogorov: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j >= b.size() || (i < a.size() && a[i] <= b[j]))
      v = a[i];
    else
      v = b[j];
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// b with its most isolated 0.1% removed: points whose nearest-neighbour
/// distance exceeds the 0.999 quantile of nearest-neighbour distances.
inline std::vector<Complex> quantile_hull(std::span<const Complex> b, double q = 0.999) {
  if (b.size() < 2) return {b.begin(), b.end()};
  std::vector<double> nn(b.size(), kInf);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      const double dd = std::norm(b[i] - b[j]);
      nn[i] = std::min(nn[i], dd);
      nn[j] = std::min(nn[j], dd);
    }
  std::vector<double> sorted = nn;
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size()))) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  const double cut = sorted[k];
  std::vector<Complex> out;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (nn[i] <= cut) out.push_back(b[i]);
  return out;
}

inline CompareReport compare_measures(std::span<const Complex> a, std::span<const Complex> b, std::span<const Complex> test_z,
                                      double exclusion = 0.1) {
  if (a.empty() || b.empty()) throw std::invalid_argument("compare_measures: samples must be non-empty");
  CompareReport rep;
  auto near = [&](Complex z, std::span<const Complex> pts) {
    return std::any_of(pts.begin(), pts.end(), [&](Complex p) { return std::abs(z - p) < exclusion; });
  };
  double ss = 0.0;
  for (std::size_t k = 0; k < test_z.size(); ++k) {
    const Complex z = test_z[k];
    if (near(z, a) || near(z, b)) {
      rep.excluded.push_back(k);
      continue;
    }
    const double diff = std::abs(sample_logpot(a, z) - sample_logpot(b, z));
    ss += diff * diff;
    rep.logpot_max = std::max(rep.logpot_max, diff);
    ++rep.test_points_used;
  }
  if (rep.test_points_used > 0) rep.logpot_rmse = std::sqrt(ss / static_cast<double>(rep.test_points_used));

  std::vector<double> ra, rb, ta, tb;
  for (auto p : a) {
    ra.push_back(std::abs(p));
    ta.push_back(std::arg(p));
  }
  for (auto p : b) {
    rb.push_back(std::abs(p));
    tb.push_back(std::arg(p));
  }
  rep.radial_wasserstein = wasserstein1(ra, rb);
  rep.angular_ks = kolmogorov(ta, tb);

  const auto hull = quantile_hull(b);
  std::size_t covered = 0;
  for (auto p : a)
    if (std::any_of(hull.begin(), hull.end(), [&](Complex h) { return std::abs(p - h) <= exclusion; })) ++covered;
  rep.support_coverage = static_cast<double>(covered) / static_cast<double>(a.size());
  return rep;
}

/// n points on the circle of radius r, angles 2 pi k / n.
inline std::vector<Complex> test_ring(std::size_t n, double r, Complex center = {}) {
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k) z[k] = center + std::polar(r, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  return z;
}

}  // namespace nnspec
