#pragma once

// Deterministic equivalent of the noisy log-determinant: drop the N* smallest
// singular values of M - z, keep the log-determinant of the rest, and correct
// by -alpha (gamma - 1/2) with alpha estimated as N* log N / N.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace nnspec {

struct TruncationConfig {
  double gamma = 1.0;
  double eta = 0.1;  // epsilon_N = N^{-eta}

  void validate() const {
    if (!(gamma > 0.5) || !std::isfinite(gamma)) throw std::invalid_argument("truncation: gamma must be > 1/2");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("truncation: eta must be > 0");
  }
  double epsilon(std::size_t n) const { return std::pow(static_cast<double>(n), -eta); }
  /// epsilon^{-1} N^{-gamma}; the threshold at (1-based) index i is this times sqrt(N - i + 1).
  double base_threshold(std::size_t n) const {
    const double dn = static_cast<double>(n);
    return std::pow(dn, eta - gamma);
  }
};

/// Largest 1-based i with sigma_i < eps^{-1} N^{-gamma} sqrt(N - i + 1); 1 if none.
inline std::size_t truncation_point(std::span<const double> sigma_ascending, std::size_t n, const TruncationConfig& cfg) {
  cfg.validate();
  if (sigma_ascending.size() != n) throw std::invalid_argument("truncation_point: expected N singular values");
  if (!std::is_sorted(sigma_ascending.begin(), sigma_ascending.end()))
    throw std::invalid_argument("truncation_point: singular values must be sorted ascending");
  const double base = cfg.base_threshold(n);
  for (std::size_t i = n; i >= 1; --i) {
    if (sigma_ascending[i - 1] < base * std::sqrt(static_cast<double>(n - i + 1))) return i;
  }
  return 1;
}

struct TruncationResult {
  std::size_t n_star = 1;
  std::vector<double> sigma_ascending;
  double log_det_B = 0.0;  // sum_{i > N*} log sigma_i
  double alpha_hat = 0.0;  // N* log N / N
  double g_value = 0.0;
};

inline TruncationResult truncation_from_singular_values(std::vector<double> sigma_ascending, const TruncationConfig& cfg) {
  TruncationResult r;
  const std::size_t n = sigma_ascending.size();
  if (n == 0) throw std::invalid_argument("g_value: empty matrix");
  r.sigma_ascending = std::move(sigma_ascending);
  r.n_star = truncation_point(r.sigma_ascending, n, cfg);
  const double dn = static_cast<double>(n);
  if (r.sigma_ascending.back() == 0.0) {
    r.log_det_B = kNegInf;
    r.g_value = kNegInf;
    return r;
  }
  double s = 0.0;
  for (std::size_t i = r.n_star; i < n; ++i) s += std::log(r.sigma_ascending[i]);
  r.log_det_B = s;
  r.alpha_hat = static_cast<double>(r.n_star) * std::log(dn) / dn;
  r.g_value = s / dn - r.alpha_hat * (cfg.gamma - 0.5);
  return r;
}

/// g_N(z) for the noise-free matrix M.
inline TruncationResult g_value(const CMatrix& m, Complex z, const TruncationConfig& cfg) {
  m.require_square("g_value");
  cfg.validate();
  auto sv = linalg::singular_values(m.shifted(z));
  if (!sv.converged) throw Error("g_value: singular value iteration did not converge");
  std::reverse(sv.values.begin(), sv.values.end());
  return truncation_from_singular_values(std::move(sv.values), cfg);
}

struct EquivalenceRow {
  std::uint64_t seed = 0;
  double logdet_empirical = 0.0;  // (1/N) log|det(perturbed - z)|, -inf if exactly singular
  double g_value = 0.0;
  double discrepancy = 0.0;       // logdet_empirical - g_value
};

struct EquivalenceReport {
  TruncationResult truncation;
  std::vector<EquivalenceRow> rows;
  std::size_t infinite = 0;  // replicas with a -inf log-determinant (excluded from the summary)
  double mean_abs_discrepancy = 0.0;
  double max_abs_discrepancy = 0.0;
};

inline EquivalenceReport equivalence_report(const CMatrix& m, Complex z, const TruncationConfig& cfg,
                                            std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("equivalence_report: need at least one seed");
  EquivalenceReport rep;
  rep.truncation = g_value(m, z, cfg);
  const double dn = static_cast<double>(m.rows());
  rep.rows.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t k) {
    const auto pm = perturb(m, {cfg.gamma, seeds[k]});
    auto& row = rep.rows[k];
    row.seed = seeds[k];
    row.logdet_empirical = linalg::log_abs_det(pm.shifted(z)) / dn;
    row.g_value = rep.truncation.g_value;
    row.discrepancy = row.logdet_empirical - row.g_value;
  });
  std::size_t finite = 0;
  for (const auto& r : rep.rows) {
    if (!std::isfinite(r.discrepancy)) {
      ++rep.infinite;
      continue;
    }
    ++finite;
    rep.mean_abs_discrepancy += std::abs(r.discrepancy);
    rep.max_abs_discrepancy = std::max(rep.max_abs_discrepancy, std::abs(r.discrepancy));
  }
  if (finite > 0) rep.mean_abs_discrepancy /= static_cast<double>(finite);
  return rep;
}

struct SchurExperimentReport {
  std::size_t reps = 0;
  Complex mean_ratio{};
  double standard_error = 0.0;  // of the mean ratio
  double variance = 0.0;        // sample variance E|r - mean|^2
  double bound = 0.0;           // eps^2 / (1 - eps^2)
  double epsilon = 0.0;
  bool mean_ok = false;         // |mean - 1| <= 4 SE
  bool variance_ok = false;     // variance <= 1.5 * bound
};

/// Monte Carlo over det(B + X)/det(B) with X an n_B x n_B block of
/// N^{-gamma} times a Ginibre matrix, N = n_context.
inline SchurExperimentReport schur_experiment(std::span<const double> b_diag, double gamma, std::size_t n_context,
                                              std::size_t reps, std::uint64_t seed, double eta = 0.1) {
  if (reps < 2) throw std::invalid_argument("schur_experiment: need reps >= 2");
  const TruncationConfig cfg{gamma, eta};
  cfg.validate();
  const std::size_t nb = b_diag.size();
  if (nb == 0 || nb >= n_context + 1) throw std::invalid_argument("schur_experiment: need 1 <= |B| <= N_context");
  if (!std::is_sorted(b_diag.begin(), b_diag.end()))
    throw std::invalid_argument("schur_experiment: B entries must be sorted ascending");
  // B occupies indices N* + 1 .. N of the full ordering
  const std::size_t n_star = n_context - nb;
  const double base = cfg.base_threshold(n_context);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t i = n_star + k + 1;
    if (!(b_diag[k] >= base * std::sqrt(static_cast<double>(n_context - i + 1))))
      throw std::invalid_argument("schur_experiment: B entry " + std::to_string(k) + " is below its threshold");
  }
  double log_det_b = 0.0;
  for (double b : b_diag) log_det_b += std::log(b);
  const double noise = std::pow(static_cast<double>(n_context), -gamma);

  std::vector<Complex> ratio(reps);
  parallel_for(reps, [&](std::size_t r) {
    const CounterRng rng(seed, streams::kSchur, r);
    CMatrix a(nb, nb);
    auto data = a.data();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = noise * rng.complex_gaussian_at(2 * k);
    for (std::size_t k = 0; k < nb; ++k) a(k, k) += b_diag[k];
    const auto ld = linalg::log_det(a);
    ratio[r] = ld.singular() ? Complex{} : std::exp(ld.log_abs - log_det_b) * ld.phase;
  });

  SchurExperimentReport rep;
  rep.reps = reps;
  Complex mean{};
  for (auto v : ratio) mean += v;
  mean /= static_cast<double>(reps);
  double var = 0.0;
  for (auto v : ratio) var += std::norm(v - mean);
  var /= static_cast<double>(reps - 1);
  rep.mean_ratio = mean;
  rep.variance = var;
  rep.standard_error = std::sqrt(var / static_cast<double>(reps));
  rep.epsilon = cfg.epsilon(n_context);
  rep.bound = rep.epsilon * rep.epsilon / (1.0 - rep.epsilon * rep.epsilon);
  rep.mean_ok = std::abs(mean - 1.0) <= 4.0 * rep.standard_error;
  rep.variance_ok = var <= 1.5 * rep.bound;
  return rep;
}

}  // namespace nnspec
