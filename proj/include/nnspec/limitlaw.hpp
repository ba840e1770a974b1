#pragma once

// Predicted limit laws: roots of the symbol P_{z,x}(lambda) = sum_l f_l(x) lambda^l - z,
// closed-form and quadrature log potentials, and samplers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace nnspec {

/// Coefficients (t_0 - z, t_1, ..., t_d) with the effective degree after
/// trimming leading coefficients below 1e-14 * max|t|.
struct SymbolAtX {
  std::vector<Complex> coeffs;
  std::size_t effective_degree = 0;

  static constexpr double kTrim = 1e-14;

  SymbolAtX() = default;
  SymbolAtX(std::vector<Complex> c) : coeffs(std::move(c)) {
    double mx = 0.0;
    for (auto v : coeffs) mx = std::max(mx, std::abs(v));
    effective_degree = 0;
    for (std::size_t l = coeffs.size(); l-- > 1;) {
      if (std::abs(coeffs[l]) >= kTrim * mx && coeffs[l] != Complex{}) {
        effective_degree = l;
        break;
      }
    }
  }

  static SymbolAtX from_coefficients(std::span<const Complex> a, Complex z) {
    std::vector<Complex> c(a.begin(), a.end());
    if (c.empty()) c.push_back(0.0);
    c[0] -= z;
    return SymbolAtX(std::move(c));
  }
  static SymbolAtX from_symbol(const TwistedSymbol& sym, Complex z, double x) {
    auto c = sym.coefficients_at(x);
    c[0] -= z;
    return SymbolAtX(std::move(c));
  }

  Complex leading() const { return coeffs[effective_degree]; }

  /// P(lambda) over the effective degree.
  Complex operator()(Complex lambda) const {
    Complex s{};
    for (std::size_t l = effective_degree + 1; l-- > 0;) s = s * lambda + coeffs[l];
    return s;
  }
  Complex derivative(Complex lambda) const {
    Complex s{};
    for (std::size_t l = effective_degree + 1; l-- > 1;) s = s * lambda + static_cast<double>(l) * coeffs[l];
    return s;
  }
};

/// Companion matrix of the monic normalization; its first row is
/// (-t_{d-1}/t_d, ..., -t_0/t_d).
inline CMatrix companion(const SymbolAtX& p) {
  const std::size_t d = p.effective_degree;
  CMatrix c(d, d);
  const Complex lead = p.leading();
  for (std::size_t j = 0; j < d; ++j) c(0, j) = -p.coeffs[d - 1 - j] / lead;
  for (std::size_t i = 1; i < d; ++i) c(i, i - 1) = 1.0;
  return c;
}

/// All effective_degree roots with multiplicity: balanced companion
/// eigenvalues followed by Newton polishing.
inline std::vector<Complex> symbol_roots(const SymbolAtX& p) {
  const std::size_t d = p.effective_degree;
  if (d == 0) throw std::invalid_argument("symbol_roots: degenerate symbol (effective degree 0)");
  if (d == 1) return {-p.coeffs[0] / p.coeffs[1]};
  auto eig = linalg::eigenvalues(companion(p), {.balance = true});
  if (!eig.converged) throw Error("symbol_roots: eigensolver did not converge");
  for (auto& r : eig.values) {
    double res = std::abs(p(r));
    for (int it = 0; it < 4 && res > 0.0; ++it) {
      const Complex dp = p.derivative(r);
      if (dp == Complex{}) break;
      const Complex cand = r - p(r) / dp;
      const double cres = std::abs(p(cand));
      if (!(cres < res)) break;
      r = cand;
      res = cres;
    }
  }
  return eig.values;
}

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

/// Sum of log_+|roots| + log|leading| (or log|t_0| when the degree is 0).
inline double thouless_value(const SymbolAtX& p) {
  if (p.effective_degree == 0) {
    const double a = std::abs(p.coeffs[0]);
    return a == 0.0 ? kNegInf : std::log(a);
  }
  double s = std::log(std::abs(p.leading()));
  for (auto r : symbol_roots(p)) s += log_plus(std::abs(r));
  return s;
}

/// Log potential of the limit law of sum_l a_l J^l.
inline double limit_logpot_toeplitz(std::span<const Complex> a, Complex z) {
  return thouless_value(SymbolAtX::from_coefficients(a, z));
}

inline Complex symbol_on_circle(std::span<const Complex> a, double theta) {
  const Complex u = std::polar(1.0, theta);
  Complex s{};
  for (std::size_t l = a.size(); l-- > 0;) s = s * u + a[l];
  return s;
}

/// Distance from z to the curve theta -> P(e^{i theta}), from a scan of
/// `samples` points refined by golden-section search around the best one.
inline double distance_to_symbol_curve(std::span<const Complex> a, Complex z, std::size_t samples = 4096) {
  auto f = [&](double th) { return std::abs(symbol_on_circle(a, th) - z); };
  const double h = 2.0 * kPi / static_cast<double>(samples);
  std::size_t best = 0;
  double bv = kInf;
  for (std::size_t k = 0; k < samples; ++k) {
    const double v = f(h * static_cast<double>(k));
    if (v < bv) {
      bv = v;
      best = k;
    }
  }
  double lo = h * (static_cast<double>(best) - 1.0), hi = h * (static_cast<double>(best) + 1.0);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min({bv, f1, f2});
}

/// (1/2pi) int log|P(e^{i theta}) - z| d theta by the periodic trapezoid rule
/// on `nodes` points. The rule loses its geometric convergence when a root of
/// P - z sits within ~40/nodes of the unit circle; near-singular angles are then
/// integrated with Gauss-Legendre panels graded toward them.
/// Throws SingularityRefusal when z lies within 1e-12 of the symbol curve.
inline double limit_logpot_quadrature(std::span<const Complex> a, Complex z, std::size_t nodes = 4096) {
  if (nodes == 0) throw std::invalid_argument("limit_logpot_quadrature: need nodes >= 1");
  const double dist = distance_to_symbol_curve(a, z, std::max<std::size_t>(nodes, 1024));
  if (dist < 1e-12)
    throw SingularityRefusal("limit_logpot_quadrature: z lies on the symbol curve (distance " +
                                 std::to_string(dist) + ")",
                             dist);
  const double h = 2.0 * kPi / static_cast<double>(nodes);
  auto gap = [&](double th) { return std::abs(symbol_on_circle(a, th) - z); };
  std::vector<double> g(nodes), reach(nodes);
  double s = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double th = h * static_cast<double>(k);
    const Complex u = std::polar(1.0, th);
    Complex dp{};
    for (std::size_t l = a.size(); l-- > 1;) dp = dp * u + static_cast<double>(l) * a[l];
    g[k] = gap(th);
    reach[k] = g[k] / std::max(std::abs(dp), 1e-300);  // ~ distance of the complex singularity in theta
    s += std::log(g[k]);
  }
  std::vector<std::size_t> minima;
  bool near = false;
  for (std::size_t k = 0; k < nodes && nodes >= 3; ++k) {
    const double l = g[(k + nodes - 1) % nodes], r = g[(k + 1) % nodes];
    if (g[k] <= l && g[k] < r && reach[k] < 0.5) {
      minima.push_back(k);
      near = near || reach[k] * static_cast<double>(nodes) < 40.0;
    }
  }
  if (!near) return s / static_cast<double>(nodes);

  std::vector<double> foci;
  for (auto k : minima) {
    double lo = h * (static_cast<double>(k) - 1.0), hi = h * (static_cast<double>(k) + 1.0);
    for (int it = 0; it < 100; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (gap(m1) < gap(m2))
        hi = m2;
      else
        lo = m1;
    }
    foci.push_back(0.5 * (lo + hi));
  }
  std::sort(foci.begin(), foci.end());
  static const auto rule = quad::gauss_legendre(24);
  auto f = [&](double th) { return std::log(gap(th)); };
  double total = 0.0;
  for (std::size_t j = 0; j < foci.size(); ++j) {
    const double lo = foci[j];
    const double hi = j + 1 < foci.size() ? foci[j + 1] : foci[0] + 2.0 * kPi;
    const double mid = 0.5 * (lo + hi);
    total += quad::integrate_graded(rule, lo, mid, lo, f, 0.15, 40, 0.1) + quad::integrate_graded(rule, mid, hi, hi, f, 0.15, 40, 0.1);
  }
  return total / (2.0 * kPi);
}

struct TwistedLogpot {
  double value = 0.0;
  double refused_mass = 0.0;  // total x-length of panels skipped at the log singularity
  std::size_t refused_panels = 0;
};

/// x-average (midpoint rule) of the per-x Thouless value, branching on the
/// effective degree of P_{z,x}.
inline TwistedLogpot limit_logpot_twisted_report(const TwistedSymbol& sym, Complex z, std::size_t x_nodes = 2048) {
  if (x_nodes == 0) throw std::invalid_argument("limit_logpot_twisted: need x_nodes >= 1");
  TwistedLogpot out;
  const double h = 1.0 / static_cast<double>(x_nodes);
  double s = 0.0;
  double min_gap = kInf;
  for (std::size_t j = 0; j < x_nodes; ++j) {
    const double x = (static_cast<double>(j) + 0.5) * h;
    const auto p = SymbolAtX::from_symbol(sym, z, x);
    if (p.effective_degree == 0) {
      const double gap = std::abs(p.coeffs[0]);
      if (gap < 1e-12) {
        ++out.refused_panels;
        out.refused_mass += h;
        min_gap = std::min(min_gap, gap);
        continue;
      }
      s += std::log(gap);
    } else {
      s += thouless_value(p);
    }
  }
  // more than a couple of singular panels means f_0 = z on a set of positive measure
  if (out.refused_panels > 2)
    throw SingularityRefusal("limit_logpot_twisted: f_0(x) = z on " + std::to_string(out.refused_panels) + " of " +
                                 std::to_string(x_nodes) + " panels",
                             min_gap);
  out.value = s * h;
  return out;
}

inline double limit_logpot_twisted(const TwistedSymbol& sym, Complex z, std::size_t x_nodes = 2048) {
  return limit_logpot_twisted_report(sym, z, x_nodes).value;
}

/// E log|z - d| for the law (no positive part).
inline double iid_log_moment(const DiagonalLaw& law, Complex z) {
  switch (law.kind()) {
    case DiagonalLaw::Kind::Discrete: {
      double s = 0.0;
      for (std::size_t k = 0; k < law.points().size(); ++k) {
        if (law.weights()[k] == 0.0) continue;
        const double a = std::abs(z - law.points()[k]);
        if (a == 0.0) return kNegInf;
        s += law.weights()[k] * std::log(a);
      }
      return s;
    }
    case DiagonalLaw::Kind::UniformInterval: {
      // d = lo + t (hi - lo), t ~ U[0,1]; the integrand peaks at t = Re w
      const Complex span = law.hi() - law.lo();
      const Complex w = (z - law.lo()) / span;
      static const auto rule = quad::gauss_legendre(24);
      const double inner = quad::integrate_graded(rule, 0.0, 1.0, w.real(), [&](double t) {
        return 0.5 * std::log(std::norm(w - t));
      });
      return inner + std::log(std::abs(span));
    }
    case DiagonalLaw::Kind::Profile:
      break;
  }
  throw std::invalid_argument("limit_logpot_iid: a deterministic profile is not an i.i.d. law (use the twisted formula)");
}

/// (E log|z - d_1|) v 0.
inline double limit_logpot_iid(const DiagonalLaw& law, Complex z) { return std::max(iid_log_moment(law, z), 0.0); }

/// i.i.d. samples of sum_l f_l(X) U^l, X ~ U[0,1], U uniform on the unit circle.
inline std::vector<Complex> sample_limit_law(const TwistedSymbol& sym, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample_limit_law: need count >= 1");
  const CounterRng rng(seed, streams::kLimitLaw);
  std::vector<Complex> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = rng.uniform_at(2 * k);
    const Complex u = std::polar(1.0, 2.0 * kPi * rng.uniform_at(2 * k + 1));
    Complex s{};
    for (std::size_t l = sym.generators.size(); l-- > 0;) s = s * u + sym.generators[l](x);
    out[k] = s;
  }
  return out;
}

/// For band-1 symbols the support of the limit law is the union over x of the
/// circles |w - f_0(x)| = |f_1(x)|; returns the distance from w to that set.
inline double distance_to_circle_family(const TwistedSymbol& sym, Complex w, std::size_t x_samples = 4096) {
  if (sym.band() != 1) throw std::invalid_argument("distance_to_circle_family: band must be 1");
  auto f = [&](double x) { return std::abs(std::abs(w - sym.generators[0](x)) - std::abs(sym.generators[1](x))); };
  const double h = 1.0 / static_cast<double>(x_samples);
  std::size_t best = 0;
  double bv = kInf;
  for (std::size_t k = 0; k <= x_samples; ++k) {
    const double v = f(h * static_cast<double>(k));
    if (v < bv) {
      bv = v;
      best = k;
    }
  }
  double lo = std::max(0.0, h * (static_cast<double>(best) - 1.0));
  double hi = std::min(1.0, h * (static_cast<double>(best) + 1.0));
  for (int it = 0; it < 100; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min(bv, f(0.5 * (lo + hi)));
}

}  // namespace nnspec
