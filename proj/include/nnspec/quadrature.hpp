#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace nnspec::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double dk = static_cast<double>(k);
        const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = dn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Integral over [a, b] with a fixed rule.
template <class F>
double integrate(const Rule& rule, double a, double b, F&& f) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += rule.weights[k] * f(c + h * rule.nodes[k]);
  return h * s;
}

/// Integral over [a, b] on a mesh graded geometrically toward `focus`, for
/// integrands with an (integrable) logarithmic peak there. Panels longer than
/// `max_panel` are split evenly.
template <class F>
double integrate_graded(const Rule& rule, double a, double b, double focus, F&& f, double ratio = 0.15,
                        int levels = 40, double max_panel = kInf) {
  focus = std::clamp(focus, a, b);
  double s = 0.0;
  auto piece = [&](double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    const double parts = std::max(1.0, std::ceil((hi - lo) / max_panel));
    const double w = (hi - lo) / parts;
    double t = 0.0;
    for (double k = 0; k < parts; ++k) t += integrate(rule, lo + k * w, k + 1 == parts ? hi : lo + (k + 1) * w, f);
    return t;
  };
  auto graded = [&](double lo, double hi, bool toward_lo) {
    const double len = hi - lo;
    if (len <= 0.0) return;
    // below this width the innermost nodes would round onto the focus
    const double floor = 1e-11 * std::max({std::abs(lo), std::abs(hi), len});
    double outer = len;
    for (int k = 0; k < levels && outer * ratio > floor; ++k) {
      const double inner = outer * ratio;
      if (toward_lo)
        s += piece(lo + inner, lo + outer);
      else
        s += piece(hi - outer, hi - inner);
      outer = inner;
    }
    s += toward_lo ? piece(lo, lo + outer) : piece(hi - outer, hi);
  };
  graded(a, focus, false);
  graded(focus, b, true);
  return s;
}

}  // namespace nnspec::quad
