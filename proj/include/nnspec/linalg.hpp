#pragma once

// Dense complex linear algebra: Hessenberg reduction and shifted QR for
// eigenvalues, Householder bidiagonalization plus implicit-shift bidiagonal QR
// for singular values, LU for determinants and solves.
//
// Householder reflectors are trimmed to the support of the vector they
// annihilate, so banded inputs (the upper-triangular Toeplitz families) are
// reduced in O(n^2 * band) rather than O(n^3).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace nnspec::linalg {

struct EigenOptions {
  bool balance = false;
  double deflation_tol = 1e-14;
  std::size_t sweeps_per_eigenvalue = 40;
};

struct EigenResult {
  std::vector<Complex> values;
  std::size_t iterations = 0;
  bool converged = true;
};

/// Singular values in non-increasing order.
struct SingularValues {
  std::vector<double> values;
  std::size_t iterations = 0;
  bool converged = true;
};

struct LogDet {
  double log_abs = 0.0;  // -inf for an exactly singular matrix
  Complex phase{1.0, 0.0};
  bool singular() const noexcept { return log_abs == kNegInf; }
};

enum class SminMode { Auto, Dense, InverseIteration };

struct SmallestSingular {
  double value = 0.0;
  bool exact_singular = false;
  bool converged = true;
  std::size_t iterations = 0;
};

struct Svd {
  std::vector<double> values;  // non-increasing
  CMatrix v;                   // right singular vectors as columns, matching `values`
  bool converged = true;
};

struct QrResult {
  CMatrix q;  // m x k, orthonormal columns
  CMatrix r;  // k x k upper triangular
};

namespace detail {

// H = I - scale * v v^H acting on `v.size()` consecutive coordinates; H x = beta e1.
struct Reflector {
  std::vector<Complex> v;
  double scale = 0.0;
  Complex beta{};
  bool identity() const noexcept { return v.empty(); }
};

inline Reflector make_reflector(std::span<const Complex> x) {
  Reflector h;
  if (x.empty()) return h;
  std::size_t last = 0;
  for (std::size_t i = x.size(); i-- > 1;) {
    if (x[i] != Complex{}) {
      last = i;
      break;
    }
  }
  h.beta = x[0];
  if (last == 0) return h;
  const double nrm = norm2(x.first(last + 1));
  const Complex ph = unit_phase(x[0]);
  h.v.resize(last + 1);
  for (std::size_t i = 0; i <= last; ++i) h.v[i] = x[i] / nrm;
  h.v[0] += ph;
  h.scale = 1.0 / (1.0 + std::abs(x[0]) / nrm);
  h.beta = -ph * nrm;
  return h;
}

// A[row0 + r, col] <- (H A)[...] for r < |v|, col in [col0, col1).
inline void apply_left(CMatrix& a, const Reflector& h, std::size_t row0, std::size_t col0, std::size_t col1) {
  if (h.identity() || col0 >= col1) return;
  const std::size_t width = col1 - col0;
  std::vector<Complex> w(width);
  for (std::size_t r = 0; r < h.v.size(); ++r) {
    const Complex cv = std::conj(h.v[r]);
    if (cv == Complex{}) continue;
    const Complex* row = a.row(row0 + r) + col0;
    for (std::size_t j = 0; j < width; ++j) w[j] += cv * row[j];
  }
  for (std::size_t r = 0; r < h.v.size(); ++r) {
    const Complex f = h.scale * h.v[r];
    if (f == Complex{}) continue;
    Complex* row = a.row(row0 + r) + col0;
    for (std::size_t j = 0; j < width; ++j) row[j] -= f * w[j];
  }
}

// A[row, col0 + c] <- (A H)[...] for row in [row0, row1), c < |v|.
inline void apply_right(CMatrix& a, const Reflector& h, std::size_t col0, std::size_t row0, std::size_t row1) {
  if (h.identity()) return;
  const std::size_t len = h.v.size();
  for (std::size_t r = row0; r < row1; ++r) {
    Complex* row = a.row(r) + col0;
    Complex s{};
    for (std::size_t c = 0; c < len; ++c) s += row[c] * h.v[c];
    if (s == Complex{}) continue;
    const Complex f = h.scale * s;
    for (std::size_t c = 0; c < len; ++c) row[c] -= f * std::conj(h.v[c]);
  }
}

// Rotation G^H = [[c, s], [-conj(s), c]] with G^H (a, b)^T = (r, 0)^T.
struct Givens {
  double c = 1.0;
  Complex s{};
};

inline Givens make_givens(Complex a, Complex b, Complex* r = nullptr) {
  Givens g;
  if (b == Complex{}) {
    if (r) *r = a;
  } else if (a == Complex{}) {
    g.c = 0.0;
    g.s = 1.0;
    if (r) *r = b;
  } else {
    const double na = std::abs(a);
    const double nrm = std::hypot(na, std::abs(b));
    const Complex ph = a / na;
    g.c = na / nrm;
    g.s = ph * std::conj(b) / nrm;
    if (r) *r = ph * nrm;
  }
  return g;
}

inline void rotate_rows(CMatrix& t, const Givens& g, std::size_t p, std::size_t q, std::size_t col0, std::size_t col1) {
  Complex* rp = t.row(p);
  Complex* rq = t.row(q);
  const Complex sc = std::conj(g.s);
  for (std::size_t j = col0; j <= col1; ++j) {
    const Complex x = rp[j];
    const Complex y = rq[j];
    rp[j] = g.c * x + g.s * y;
    rq[j] = -sc * x + g.c * y;
  }
}

inline void rotate_cols(CMatrix& t, const Givens& g, std::size_t p, std::size_t q, std::size_t row0, std::size_t row1) {
  const Complex sc = std::conj(g.s);
  for (std::size_t r = row0; r <= row1; ++r) {
    const Complex x = t(r, p);
    const Complex y = t(r, q);
    t(r, p) = g.c * x + sc * y;
    t(r, q) = -g.s * x + g.c * y;
  }
}

inline double norm1(Complex z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
inline Complex wilkinson_shift(const CMatrix& t, std::size_t iu, std::size_t iter) {
  if (iter == 10 || iter == 20) {
    // exceptional shift (EISPACK comqr)
    const std::size_t k = iu >= 2 ? iu - 2 : 0;
    return std::abs(t(iu, iu - 1).real()) + std::abs(t(iu - 1, k).real());
  }
  Complex a = t(iu - 1, iu - 1), b = t(iu - 1, iu), c = t(iu, iu - 1), d = t(iu, iu);
  const double normt = norm1(a) + norm1(b) + norm1(c) + norm1(d);
  if (normt == 0.0) return 0.0;
  a /= normt;
  b /= normt;
  c /= normt;
  d /= normt;
  const Complex bc = b * c;
  const Complex diff = a - d;
  const Complex disc = std::sqrt(diff * diff + 4.0 * bc);
  const Complex det = a * d - bc;
  const Complex tr = a + d;
  Complex e1 = (tr + disc) / 2.0;
  Complex e2 = (tr - disc) / 2.0;
  if (norm1(e1) > norm1(e2))
    e2 = det / e1;
  else if (norm1(e2) != 0.0)
    e1 = det / e2;
  return normt * (norm1(e1 - d) < norm1(e2 - d) ? e1 : e2);
}

// Values-only singular values of a 2x2 upper triangular [[f, g], [0, h]] (LAPACK dlas2).
inline std::pair<double, double> las2(double f, double g, double h) {
  const double fa = std::abs(f), ga = std::abs(g), ha = std::abs(h);
  const double fhmn = std::min(fa, ha), fhmx = std::max(fa, ha);
  double ssmin, ssmax;
  if (fhmn == 0.0) {
    ssmin = 0.0;
    if (fhmx == 0.0)
      ssmax = ga;
    else {
      const double mx = std::max(fhmx, ga), mn = std::min(fhmx, ga);
      ssmax = mx * std::sqrt(1.0 + (mn / mx) * (mn / mx));
    }
  } else if (ga < fhmx) {
    const double as = 1.0 + fhmn / fhmx;
    const double at = (fhmx - fhmn) / fhmx;
    const double au = (ga / fhmx) * (ga / fhmx);
    const double c = 2.0 / (std::sqrt(as * as + au) + std::sqrt(at * at + au));
    ssmin = fhmn * c;
    ssmax = fhmx / c;
  } else {
    const double au = fhmx / ga;
    if (au == 0.0) {
      ssmin = (fhmn * fhmx) / ga;
      ssmax = ga;
    } else {
      const double as = 1.0 + fhmn / fhmx;
      const double at = (fhmx - fhmn) / fhmx;
      const double c = 1.0 / (std::sqrt(1.0 + (as * au) * (as * au)) + std::sqrt(1.0 + (at * au) * (at * au)));
      ssmin = (fhmn * c) * au;
      ssmin += ssmin;
      ssmax = ga / (c + c);
    }
  }
  return {ssmin, ssmax};
}

// Real plane rotation (LAPACK dlartg): [c s; -s c] (f, g)^T = (r, 0)^T.
inline void lartg(double f, double g, double& c, double& s, double& r) {
  if (g == 0.0) {
    c = 1.0;
    s = 0.0;
    r = f;
  } else if (f == 0.0) {
    c = 0.0;
    s = g > 0 ? 1.0 : -1.0;
    r = std::abs(g);
  } else {
    r = std::hypot(f, g);
    if (f < 0) r = -r;
    c = f / r;
    s = g / r;
  }
}

}  // namespace detail

/// Unitary reduction to upper Hessenberg form (entries below the first
/// subdiagonal are exactly zero).
inline CMatrix hessenberg(const CMatrix& a) {
  a.require_square("hessenberg");
  CMatrix h = a;
  const std::size_t n = h.rows();
  std::vector<Complex> x;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    x.resize(n - k - 1);
    for (std::size_t i = k + 1; i < n; ++i) x[i - k - 1] = h(i, k);
    const auto refl = detail::make_reflector(x);
    if (refl.identity()) continue;
    detail::apply_left(h, refl, k + 1, k + 1, n);
    detail::apply_right(h, refl, k + 1, 0, n);
    h(k + 1, k) = refl.beta;
    for (std::size_t i = k + 2; i < k + 1 + refl.v.size(); ++i) h(i, k) = 0.0;
  }
  return h;
}

/// Diagonal similarity scaling by powers of two (Parlett-Reinsch), improving
/// the conditioning of eigenvalues for badly scaled matrices such as
/// companion matrices.
inline CMatrix balance(const CMatrix& a) {
  a.require_square("balance");
  CMatrix b = a;
  const std::size_t n = b.rows();
  constexpr double radix = 2.0, radix2 = 4.0;
  bool again = true;
  for (int pass = 0; again && pass < 100; ++pass) {
    again = false;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += detail::norm1(b(j, i));
        r += detail::norm1(b(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      const double s = c + r;
      double f = 1.0;
      double g = r / radix;
      while (c < g) {
        f *= radix;
        c *= radix2;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= radix2;
      }
      if ((c + r) / f < 0.95 * s) {
        again = true;
        for (std::size_t j = 0; j < n; ++j) b(i, j) /= f;
        for (std::size_t j = 0; j < n; ++j) b(j, i) *= f;
      }
    }
  }
  return b;
}

/// Eigenvalues of an upper Hessenberg matrix by implicit single-shift complex
/// QR with Wilkinson shifts. Only the active window is updated, so no Schur
/// vectors are formed.
inline EigenResult hessenberg_eigenvalues(CMatrix t, const EigenOptions& opt = {}) {
  const std::size_t n = t.rows();
  EigenResult res;
  if (n == 0) return res;
  const double fro = t.frobenius_norm();
  auto negligible = [&](std::size_t i) {
    const double sd = std::abs(t(i + 1, i));
    if (sd == 0.0) return true;
    double d = std::abs(t(i, i)) + std::abs(t(i + 1, i + 1));
    if (d == 0.0) d = fro;
    if (sd <= opt.deflation_tol * d || sd < std::numeric_limits<double>::min()) {
      t(i + 1, i) = 0.0;
      return true;
    }
    return false;
  };

  std::size_t iu = n - 1;
  std::size_t iter = 0;
  const std::size_t max_total = opt.sweeps_per_eigenvalue * n;
  while (true) {
    while (iu > 0) {
      if (!negligible(iu - 1)) break;
      iter = 0;
      --iu;
    }
    if (iu == 0) break;
    ++iter;
    if (++res.iterations > max_total) {
      res.converged = false;
      break;
    }
    std::size_t il = iu - 1;
    while (il > 0 && !negligible(il - 1)) --il;

    const Complex shift = detail::wilkinson_shift(t, iu, iter);
    auto rot = detail::make_givens(t(il, il) - shift, t(il + 1, il));
    detail::rotate_rows(t, rot, il, il + 1, il, iu);
    detail::rotate_cols(t, rot, il, il + 1, il, std::min(il + 2, iu));
    for (std::size_t i = il + 1; i < iu; ++i) {
      Complex r;
      rot = detail::make_givens(t(i, i - 1), t(i + 1, i - 1), &r);
      t(i, i - 1) = r;
      t(i + 1, i - 1) = 0.0;
      detail::rotate_rows(t, rot, i, i + 1, i, iu);
      detail::rotate_cols(t, rot, i, i + 1, il, std::min(i + 2, iu));
    }
  }
  res.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.values[i] = t(i, i);
  return res;
}

/// All n eigenvalues (with algebraic multiplicity). On non-convergence the
/// partially reduced diagonal is returned with converged = false.
inline EigenResult eigenvalues(const CMatrix& a, const EigenOptions& opt = {}) {
  a.require_square("eigenvalues");
  return hessenberg_eigenvalues(hessenberg(opt.balance ? balance(a) : a), opt);
}

/// Moduli of the bidiagonal form: A = U B V^H with B upper bidiagonal; a
/// complex bidiagonal is unitarily equivalent (diagonal phases) to the real
/// bidiagonal of its moduli.
struct Bidiagonal {
  std::vector<double> diag;
  std::vector<double> super;
};

inline Bidiagonal bidiagonalize(const CMatrix& a) {
  a.require_square("bidiagonalize");
  CMatrix b = a;
  const std::size_t n = b.rows();
  Bidiagonal out;
  out.diag.resize(n);
  out.super.resize(n > 0 ? n - 1 : 0);
  std::vector<Complex> x;
  for (std::size_t k = 0; k < n; ++k) {
    x.resize(n - k);
    for (std::size_t i = k; i < n; ++i) x[i - k] = b(i, k);
    auto left = detail::make_reflector(x);
    if (!left.identity()) {
      detail::apply_left(b, left, k, k + 1, n);
      b(k, k) = left.beta;
      for (std::size_t i = k + 1; i < k + left.v.size(); ++i) b(i, k) = 0.0;
    }
    if (k + 1 < n) {
      x.resize(n - k - 1);
      for (std::size_t j = k + 1; j < n; ++j) x[j - k - 1] = std::conj(b(k, j));
      auto right = detail::make_reflector(x);
      if (!right.identity()) {
        detail::apply_right(b, right, k + 1, k + 1, n);
        b(k, k + 1) = std::conj(right.beta);
        for (std::size_t j = k + 2; j < k + 1 + right.v.size(); ++j) b(k, j) = 0.0;
      }
      out.super[k] = std::abs(b(k, k + 1));
    }
    out.diag[k] = std::abs(b(k, k));
  }
  return out;
}

/// Singular values of a real upper bidiagonal matrix by implicit-shift QR with
/// the zero-shift variant near convergence (Demmel-Kahan), which computes even
/// tiny singular values to high relative accuracy.
inline SingularValues bidiagonal_singular_values(std::vector<double> d_in, std::vector<double> e_in) {
  const std::size_t n = d_in.size();
  SingularValues res;
  if (n == 0) return res;
  if (e_in.size() + 1 != n) throw std::invalid_argument("bidiagonal_singular_values: size mismatch");
  // 1-based storage mirrors the reference algorithm.
  std::vector<double> d(n + 1), e(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i + 1] = d_in[i];
  for (std::size_t i = 0; i + 1 < n; ++i) e[i + 1] = e_in[i];

  const double eps = std::numeric_limits<double>::epsilon() / 2.0;
  const double unfl = std::numeric_limits<double>::min();
  const double tolmul = std::max(10.0, std::min(100.0, std::pow(eps, -0.125)));
  const double tol = tolmul * eps;
  const double maxitr = 6.0;
  const double dn = static_cast<double>(n);

  double smax = 0.0;
  for (std::size_t i = 1; i <= n; ++i) smax = std::max(smax, std::abs(d[i]));
  for (std::size_t i = 1; i < n; ++i) smax = std::max(smax, std::abs(e[i]));

  double sminoa = std::abs(d[1]);
  if (sminoa != 0.0) {
    double mu = sminoa;
    for (std::size_t i = 2; i <= n; ++i) {
      mu = std::abs(d[i]) * (mu / (mu + std::abs(e[i - 1])));
      sminoa = std::min(sminoa, mu);
      if (sminoa == 0.0) break;
    }
  }
  sminoa /= std::sqrt(dn);
  const double thresh = std::max(tol * sminoa, maxitr * dn * dn * unfl);
  const double maxit = maxitr * dn * dn;

  double iter = 0.0;
  std::size_t oldll = 0, oldm = 0;
  bool have_old = false;
  int idir = 0;
  std::size_t m = n;

  while (m > 1) {
    if (iter > maxit) {
      res.converged = false;
      break;
    }
    // find the bottom unreduced block ll..m
    smax = std::abs(d[m]);
    std::size_t ll = 0;
    bool split = false;
    for (std::size_t lll = 1; lll <= m - 1; ++lll) {
      ll = m - lll;
      const double abss = std::abs(d[ll]);
      const double abse = std::abs(e[ll]);
      if (abse <= thresh) {
        split = true;
        break;
      }
      smax = std::max({smax, abss, abse});
    }
    if (split) {
      e[ll] = 0.0;
      if (ll == m - 1) {
        --m;
        continue;
      }
    } else {
      ll = 0;
    }
    ++ll;
    if (ll == m - 1) {
      const auto [smin2, smax2] = detail::las2(d[m - 1], e[m - 1], d[m]);
      d[m - 1] = smax2;
      e[m - 1] = 0.0;
      d[m] = smin2;
      m = m >= 2 ? m - 2 : 0;
      continue;
    }
    if (!have_old || ll > oldm || m < oldll) idir = std::abs(d[ll]) >= std::abs(d[m]) ? 1 : 2;

    double sminl = 0.0;
    bool restart = false;
    if (idir == 1) {
      if (std::abs(e[m - 1]) <= tol * std::abs(d[m])) {
        e[m - 1] = 0.0;
        continue;
      }
      double mu = std::abs(d[ll]);
      sminl = mu;
      for (std::size_t lll = ll; lll <= m - 1; ++lll) {
        if (std::abs(e[lll]) <= tol * mu) {
          e[lll] = 0.0;
          restart = true;
          break;
        }
        mu = std::abs(d[lll + 1]) * (mu / (mu + std::abs(e[lll])));
        sminl = std::min(sminl, mu);
      }
    } else {
      if (std::abs(e[ll]) <= tol * std::abs(d[ll])) {
        e[ll] = 0.0;
        continue;
      }
      double mu = std::abs(d[m]);
      sminl = mu;
      for (std::size_t lll = m - 1; lll >= ll; --lll) {
        if (std::abs(e[lll]) <= tol * mu) {
          e[lll] = 0.0;
          restart = true;
          break;
        }
        mu = std::abs(d[lll]) * (mu / (mu + std::abs(e[lll])));
        sminl = std::min(sminl, mu);
        if (lll == ll) break;
      }
    }
    if (restart) continue;
    oldll = ll;
    oldm = m;
    have_old = true;

    double shift = 0.0;
    if (!(dn * tol * (sminl / smax) <= std::max(eps, 0.01 * tol))) {
      double sll;
      if (idir == 1) {
        sll = std::abs(d[ll]);
        shift = detail::las2(d[m - 1], e[m - 1], d[m]).first;
      } else {
        sll = std::abs(d[m]);
        shift = detail::las2(d[ll], e[ll], d[ll + 1]).first;
      }
      if (sll > 0.0 && (shift / sll) * (shift / sll) < eps) shift = 0.0;
    }
    iter += static_cast<double>(m - ll);
    ++res.iterations;

    double cs, sn, r, oldcs, oldsn, h;
    if (shift == 0.0) {
      if (idir == 1) {
        cs = 1.0;
        oldcs = 1.0;
        oldsn = 0.0;
        for (std::size_t i = ll; i <= m - 1; ++i) {
          detail::lartg(d[i] * cs, e[i], cs, sn, r);
          if (i > ll) e[i - 1] = oldsn * r;
          detail::lartg(oldcs * r, d[i + 1] * sn, oldcs, oldsn, d[i]);
        }
        h = d[m] * cs;
        d[m] = h * oldcs;
        e[m - 1] = h * oldsn;
        if (std::abs(e[m - 1]) <= thresh) e[m - 1] = 0.0;
      } else {
        cs = 1.0;
        oldcs = 1.0;
        oldsn = 0.0;
        for (std::size_t i = m; i >= ll + 1; --i) {
          detail::lartg(d[i] * cs, e[i - 1], cs, sn, r);
          if (i < m) e[i] = oldsn * r;
          detail::lartg(oldcs * r, d[i - 1] * sn, oldcs, oldsn, d[i]);
        }
        h = d[ll] * cs;
        d[ll] = h * oldcs;
        e[ll] = h * oldsn;
        if (std::abs(e[ll]) <= thresh) e[ll] = 0.0;
      }
    } else {
      double f, g, cosr, sinr, cosl, sinl;
      if (idir == 1) {
        f = (std::abs(d[ll]) - shift) * ((d[ll] >= 0 ? 1.0 : -1.0) + shift / d[ll]);
        g = e[ll];
        for (std::size_t i = ll; i <= m - 1; ++i) {
          detail::lartg(f, g, cosr, sinr, r);
          if (i > ll) e[i - 1] = r;
          f = cosr * d[i] + sinr * e[i];
          e[i] = cosr * e[i] - sinr * d[i];
          g = sinr * d[i + 1];
          d[i + 1] = cosr * d[i + 1];
          detail::lartg(f, g, cosl, sinl, r);
          d[i] = r;
          f = cosl * e[i] + sinl * d[i + 1];
          d[i + 1] = cosl * d[i + 1] - sinl * e[i];
          if (i < m - 1) {
            g = sinl * e[i + 1];
            e[i + 1] = cosl * e[i + 1];
          }
        }
        e[m - 1] = f;
        if (std::abs(e[m - 1]) <= thresh) e[m - 1] = 0.0;
      } else {
        f = (std::abs(d[m]) - shift) * ((d[m] >= 0 ? 1.0 : -1.0) + shift / d[m]);
        g = e[m - 1];
        for (std::size_t i = m; i >= ll + 1; --i) {
          detail::lartg(f, g, cosr, sinr, r);
          if (i < m) e[i] = r;
          f = cosr * d[i] + sinr * e[i - 1];
          e[i - 1] = cosr * e[i - 1] - sinr * d[i];
          g = sinr * d[i - 1];
          d[i - 1] = cosr * d[i - 1];
          detail::lartg(f, g, cosl, sinl, r);
          d[i] = r;
          f = cosl * e[i - 1] + sinl * d[i - 1];
          d[i - 1] = cosl * d[i - 1] - sinl * e[i - 1];
          if (i > ll + 1) {
            g = sinl * e[i - 2];
            e[i - 2] = cosl * e[i - 2];
          }
        }
        e[ll] = f;
        if (std::abs(e[ll]) <= thresh) e[ll] = 0.0;
      }
    }
  }

  res.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.values[i] = std::abs(d[i + 1]);
  std::sort(res.values.begin(), res.values.end(), std::greater<>());
  return res;
}

inline SingularValues singular_values(const CMatrix& a) {
  a.require_square("singular_values");
  auto b = bidiagonalize(a);
  return bidiagonal_singular_values(std::move(b.diag), std::move(b.super));
}

inline double operator_norm(const CMatrix& a) {
  if (a.empty()) return 0.0;
  return singular_values(a).values.front();
}

/// LU factorization with partial pivoting, PA = LU.
class LuFactor {
 public:
  explicit LuFactor(const CMatrix& a) : lu_(a), perm_(a.rows()) {
    a.require_square("lu");
    const std::size_t n = lu_.rows();
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    bool odd = false;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::norm(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        const double v = std::norm(lu_(i, k));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (lu_(p, k) == Complex{}) {
        singular_ = true;
        continue;
      }
      if (p != k) {
        std::swap_ranges(lu_.row(k), lu_.row(k) + n, lu_.row(p));
        std::swap(perm_[k], perm_[p]);
        odd = !odd;
      }
      const Complex pivot = lu_(k, k);
      const Complex* rk = lu_.row(k);
      for (std::size_t i = k + 1; i < n; ++i) {
        Complex* ri = lu_.row(i);
        if (ri[k] == Complex{}) continue;
        // exact multiplier 1 keeps a repeated row exactly zero under FMA contraction
        const Complex l = ri[k] == pivot ? Complex{1.0} : ri[k] / pivot;
        ri[k] = l;
        for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
      }
    }
    if (singular_) {
      logdet_.log_abs = kNegInf;
      logdet_.phase = 0.0;
    } else {
      double s = 0.0;
      Complex ph = odd ? -1.0 : 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        s += std::log(std::abs(lu_(k, k)));
        ph *= unit_phase(lu_(k, k));
      }
      logdet_.log_abs = s;
      logdet_.phase = unit_phase(ph);
    }
  }

  bool singular() const noexcept { return singular_; }
  const LogDet& log_det() const noexcept { return logdet_; }
  std::size_t size() const noexcept { return lu_.rows(); }

  /// Solves A x = b.
  std::vector<Complex> solve(std::span<const Complex> b) const {
    require_nonsingular();
    const std::size_t n = size();
    std::vector<Complex> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
      const Complex* r = lu_.row(i);
      Complex s = x[i];
      for (std::size_t j = 0; j < i; ++j) s -= r[j] * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      const Complex* r = lu_.row(i);
      Complex s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= r[j] * x[j];
      x[i] = s / r[i];
    }
    return x;
  }

  /// Solves A^H x = b.
  std::vector<Complex> solve_adjoint(std::span<const Complex> b) const {
    require_nonsingular();
    const std::size_t n = size();
    std::vector<Complex> y(b.begin(), b.end());
    // U^H y = b (forward), column-oriented over rows of U
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= std::conj(lu_(i, i));
      const Complex yi = y[i];
      const Complex* r = lu_.row(i);
      for (std::size_t j = i + 1; j < n; ++j) y[j] -= std::conj(r[j]) * yi;
    }
    // L^H w = y (backward)
    for (std::size_t i = n; i-- > 0;) {
      const Complex wi = y[i];
      const Complex* r = lu_.row(i);
      for (std::size_t j = 0; j < i; ++j) y[j] -= std::conj(r[j]) * wi;
    }
    std::vector<Complex> x(n);
    for (std::size_t i = 0; i < n; ++i) x[perm_[i]] = y[i];
    return x;
  }

 private:
  void require_nonsingular() const {
    if (singular_) throw Error("LuFactor: matrix is exactly singular");
  }

  CMatrix lu_;
  std::vector<std::size_t> perm_;
  bool singular_ = false;
  LogDet logdet_;
};

inline LogDet log_det(const CMatrix& a) { return LuFactor(a).log_det(); }

/// log|det A| via LU with partial pivoting; -inf when a pivot is exactly zero.
inline double log_abs_det(const CMatrix& a) { return log_det(a).log_abs; }

/// log|det(H - z Id)| for upper Hessenberg H in O(n^2): Gaussian elimination
/// with partial pivoting only ever compares two adjacent rows.
inline LogDet hessenberg_log_det(const CMatrix& h, Complex z) {
  h.require_square("hessenberg_log_det");
  const std::size_t n = h.rows();
  CMatrix w = h.shifted(z);
  LogDet out;
  Complex ph = 1.0;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 < n && std::norm(w(k + 1, k)) > std::norm(w(k, k))) {
      std::swap_ranges(w.row(k) + k, w.row(k) + n, w.row(k + 1) + k);
      ph = -ph;
    }
    const Complex piv = w(k, k);
    if (piv == Complex{}) return {kNegInf, 0.0};
    s += std::log(std::abs(piv));
    ph *= unit_phase(piv);
    if (k + 1 < n && w(k + 1, k) != Complex{}) {
      const Complex l = w(k + 1, k) / piv;
      const Complex* rk = w.row(k);
      Complex* rn = w.row(k + 1);
      for (std::size_t j = k + 1; j < n; ++j) rn[j] -= l * rk[j];
    }
  }
  out.log_abs = s;
  out.phase = unit_phase(ph);
  return out;
}

/// One-sided (Hestenes) Jacobi SVD with right singular vectors.
inline Svd jacobi_svd(const CMatrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<std::vector<Complex>> col(n, std::vector<Complex>(m));
  std::vector<std::vector<Complex>> vcol(n, std::vector<Complex>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[j][i] = a(i, j);
    vcol[j][j] = 1.0;
  }
  Svd out;
  bool rotated = true;
  int sweep = 0;
  for (; rotated && sweep < 80; ++sweep) {
    rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = std::real(dot(col[p], col[p]));
        const double beta = std::real(dot(col[q], col[q]));
        const Complex gamma = dot(col[p], col[q]);
        const double ag = std::abs(gamma);
        if (ag == 0.0 || ag <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const Complex ph = gamma / ag;
        const double zeta = (beta - alpha) / (2.0 * ag);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        auto rot = [&](std::vector<Complex>& xp, std::vector<Complex>& xq) {
          for (std::size_t i = 0; i < xp.size(); ++i) {
            const Complex u = xp[i];
            const Complex w = xq[i] * std::conj(ph);
            xp[i] = c * u - s * w;
            xq[i] = s * u + c * w;
          }
        };
        rot(col[p], col[q]);
        rot(vcol[p], vcol[q]);
      }
    }
  }
  out.converged = !rotated;
  std::vector<double> sv(n);
  for (std::size_t j = 0; j < n; ++j) sv[j] = norm2(col[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sv[x] > sv[y]; });
  out.values.resize(n);
  out.v = CMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = sv[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vcol[order[k]][i];
  }
  return out;
}

/// Thin Householder QR of an m x k matrix (m >= k).
inline QrResult qr(const CMatrix& a) {
  const std::size_t m = a.rows(), k = a.cols();
  if (m < k) throw std::invalid_argument("qr: need rows >= cols");
  CMatrix w = a;
  std::vector<detail::Reflector> refl(k);
  std::vector<Complex> x;
  for (std::size_t j = 0; j < k; ++j) {
    x.resize(m - j);
    for (std::size_t i = j; i < m; ++i) x[i - j] = w(i, j);
    refl[j] = detail::make_reflector(x);
    if (!refl[j].identity()) {
      detail::apply_left(w, refl[j], j, j, k);
      w(j, j) = refl[j].beta;
      for (std::size_t i = j + 1; i < j + refl[j].v.size(); ++i) w(i, j) = 0.0;
    }
  }
  QrResult out;
  out.r = CMatrix(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) out.r(i, j) = w(i, j);
  out.q = CMatrix(m, k);
  for (std::size_t j = 0; j < k; ++j) out.q(j, j) = 1.0;
  for (std::size_t j = k; j-- > 0;) detail::apply_left(out.q, refl[j], j, 0, k);
  return out;
}

namespace detail {
inline std::vector<Complex> start_vector(std::size_t n) {
  CounterRng rng(0x5eed5eedULL, 0);
  std::vector<Complex> x(n);
  for (auto& v : x) v = rng.complex_gaussian();
  const double nr = norm2(x);
  for (auto& v : x) v /= nr;
  return x;
}
}  // namespace detail

/// Smallest singular value by inverse iteration on (A^H A)^{-1} using one LU
/// of A. Iterates until the Rayleigh residual falls below 1e-10 (relative).
inline SmallestSingular smallest_singular_inverse(const CMatrix& a, std::size_t max_iter = 5000) {
  a.require_square("smallest_singular");
  SmallestSingular out;
  const std::size_t n = a.rows();
  if (n == 0) return out;
  LuFactor lu(a);
  if (lu.singular()) {
    out.value = 0.0;
    out.exact_singular = true;
    return out;
  }
  auto x = detail::start_vector(n);
  out.converged = false;
  double sigma = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const auto u = lu.solve_adjoint(x);  // A^{-H} x
    const auto y = lu.solve(u);          // (A^H A)^{-1} x
    const double un = norm2(u);
    const double theta = un * un;        // x^H (A^H A)^{-1} x
    sigma = 1.0 / un;
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += std::norm(y[i] - theta * x[i]);
    res = std::sqrt(res);
    const double yn = norm2(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / yn;
    out.iterations = it;
    if (res <= 1e-10 * theta) {
      out.converged = true;
      break;
    }
  }
  // one more Rayleigh evaluation at the final vector
  const auto u = lu.solve_adjoint(x);
  sigma = 1.0 / norm2(u);
  out.value = sigma;
  return out;
}

inline SmallestSingular smallest_singular(const CMatrix& a, SminMode mode = SminMode::Auto) {
  a.require_square("smallest_singular");
  if (mode == SminMode::Auto) mode = a.rows() <= 300 ? SminMode::Dense : SminMode::InverseIteration;
  if (mode == SminMode::InverseIteration) return smallest_singular_inverse(a);
  SmallestSingular out;
  const auto sv = singular_values(a);
  out.converged = sv.converged;
  out.iterations = sv.iterations;
  out.value = sv.values.empty() ? 0.0 : sv.values.back();
  return out;
}

}  // namespace nnspec::linalg
