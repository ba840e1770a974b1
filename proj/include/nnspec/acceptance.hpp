#pragma once

// The acceptance suite: ten end-to-end checks at desk scale. Every tolerance
// and seed is fixed here; the CLI `accept` subcommand and the acceptance test
// binary both run these functions.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "detequiv.hpp"
#include "limitlaw.hpp"
#include "linalg.hpp"
#include "models.hpp"
#include "quadrature.hpp"
#include "rigidity.hpp"
#include "rng.hpp"
#include "spectra.hpp"
#include "transfer.hpp"

namespace nnspec::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace tol {
inline constexpr double kJensen = 1e-8;
inline constexpr double kJensenMinDistance = 1e-3;
inline constexpr double kJensenSeconds = 5.0;
inline constexpr double kExterior = 0.05;
inline constexpr double kInterior = 0.1;
inline constexpr double kSupportFraction = 0.99;
inline constexpr double kSupportDistance = 0.1;
inline constexpr double kEquivalence = 0.05;
inline constexpr double kToeplitzSeconds = 600.0;
inline constexpr double kSchurSeconds = 60.0;
inline constexpr double kSandwichSeconds = 120.0;
inline constexpr double kJordanRate = 0.1;
inline constexpr double kEigenvectorIdentity = 1e-10;
inline constexpr double kTrace = 1e-9;
inline constexpr double kDet = 1e-9;
inline constexpr double kSvd = 1e-8;
inline constexpr double kFrameEquality = 1e-8;
}  // namespace tol

inline constexpr std::size_t kDeskN = 1000;
inline constexpr double kDeskGamma = 2.0;
inline constexpr std::uint64_t kSeeds[] = {1, 2, 3};
inline constexpr std::size_t kRingPoints = 32;
inline constexpr double kRingRadius = 4.0;

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline const std::vector<Complex> kToeplitzSymbol{0.0, 1.0, 1.0};

inline TwistedSymbol wilkinson_symbol() { return {{Generator::affine(-1.0, 2.0), Generator::constant(1.0)}}; }

inline DiagonalLaw uniform_law() { return DiagonalLaw::uniform(-2.0, 2.0); }

/// 1. Closed-form vs quadrature log potential of the symbol (0,1,1).
inline Outcome jensen_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const CounterRng rng(20261, streams::kTestPoints);
  std::size_t drawn = 0;
  std::uint64_t c = 0;
  double worst = 0.0;
  Complex worst_z{};
  while (drawn < 100) {
    const double r = 3.0 * std::sqrt(rng.uniform_at(c++));
    const Complex z = std::polar(r, 2.0 * kPi * rng.uniform_at(c++));
    if (distance_to_symbol_curve(kToeplitzSymbol, z) < tol::kJensenMinDistance) continue;
    ++drawn;
    const double e = std::abs(limit_logpot_toeplitz(kToeplitzSymbol, z) - limit_logpot_quadrature(kToeplitzSymbol, z, 4096));
    if (e > worst) {
      worst = e;
      worst_z = z;
    }
  }
  const double secs = elapsed(t0);
  std::ostringstream os;
  os << "max err " << num(worst) << " at z=" << num(worst_z.real()) << (worst_z.imag() < 0 ? "" : "+") << num(worst_z.imag())
     << "i (dist " << num(distance_to_symbol_curve(kToeplitzSymbol, worst_z)) << "), " << num(secs) << " s";
  return {worst <= tol::kJensen && secs < tol::kJensenSeconds, os.str()};
}

/// Max over the exterior ring and seeds of |empirical - predicted| log potential.
inline double ring_error(const CMatrix& m, const std::function<double(Complex)>& predicted, std::uint64_t seed) {
  const auto pm = perturb(m, {kDeskGamma, seed});
  const auto ring = test_ring(kRingPoints, kRingRadius);
  const auto emp = empirical_logpots(pm, ring);
  double worst = 0.0;
  for (std::size_t k = 0; k < ring.size(); ++k) worst = std::max(worst, std::abs(emp[k] - predicted(ring[k])));
  return worst;
}

/// 2. Banded Toeplitz J + J^2.
inline Outcome toeplitz_desk() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = build_banded_toeplitz(kToeplitzSymbol, kDeskN);
  double worst = 0.0;
  for (auto s : kSeeds)
    worst = std::max(worst, ring_error(m, [](Complex z) { return limit_logpot_toeplitz(kToeplitzSymbol, z); }, s));
  const double secs = elapsed(t0);
  return {worst <= tol::kExterior && secs < tol::kToeplitzSeconds,
          "max ring err " + num(worst) + " over 3 seeds, " + num(secs) + " s"};
}

/// 3. Wilkinson-type D + J with d_i = -1 + 2i/N.
inline Outcome wilkinson_desk() {
  const auto sym = wilkinson_symbol();
  const auto m = build_twisted(sym, kDeskN);
  double worst = 0.0, worst_frac = 1.0;
  for (auto s : kSeeds) {
    worst = std::max(worst, ring_error(m, [&](Complex z) { return limit_logpot_twisted(sym, z); }, s));
    const auto spec = esd(perturb(m, {kDeskGamma, s}));
    std::size_t near = 0;
    for (auto w : spec.points)
      if (distance_to_circle_family(sym, w) <= tol::kSupportDistance) ++near;
    worst_frac = std::min(worst_frac, static_cast<double>(near) / static_cast<double>(spec.points.size()));
  }
  return {worst <= tol::kExterior && worst_frac >= tol::kSupportFraction,
          "max ring err " + num(worst) + ", min fraction near support " + num(worst_frac)};
}

/// 4. D + J with d_i i.i.d. uniform on [-2, 2].
inline Outcome iid_desk() {
  const auto law = uniform_law();
  const Complex interior{0.1, 0.1};
  double worst = 0.0, worst_in = 0.0;
  for (auto s : kSeeds) {
    const auto m = build_bidiagonal(sample_diagonal(law, kDeskN, s));
    worst = std::max(worst, ring_error(m, [&](Complex z) { return limit_logpot_iid(law, z); }, s));
    const auto pm = perturb(m, {kDeskGamma, s});
    worst_in = std::max(worst_in, std::abs(empirical_logpot(pm, interior) - limit_logpot_iid(law, interior)));
  }
  return {worst <= tol::kExterior && worst_in <= tol::kInterior,
          "max ring err " + num(worst) + ", interior err " + num(worst_in)};
}

/// 5. |empirical log potential - g_N| on the ring, per seed, for the three models.
inline Outcome equivalence_desk() {
  const auto ring = test_ring(kRingPoints, kRingRadius);
  const TruncationConfig cfg{kDeskGamma, 0.1};
  double worst = 0.0;
  std::string worst_model;
  auto check = [&](const CMatrix& m, std::span<const std::uint64_t> seeds, const std::string& name) {
    std::vector<double> g(ring.size());
    parallel_for(ring.size(), [&](std::size_t k) { g[k] = g_value(m, ring[k], cfg).g_value; });
    for (auto s : seeds) {
      const auto emp = empirical_logpots(perturb(m, {kDeskGamma, s}), ring);
      for (std::size_t k = 0; k < ring.size(); ++k) {
        const double e = std::abs(emp[k] - g[k]);
        if (e > worst) {
          worst = e;
          worst_model = name;
        }
      }
    }
  };
  check(build_banded_toeplitz(kToeplitzSymbol, kDeskN), kSeeds, "toeplitz");
  check(build_twisted(wilkinson_symbol(), kDeskN), kSeeds, "wilkinson");
  for (auto s : kSeeds) {
    const std::uint64_t one[] = {s};
    check(build_bidiagonal(sample_diagonal(uniform_law(), kDeskN, s)), one, "iid");
  }
  return {worst <= tol::kEquivalence, "max |L - g| " + num(worst) + (worst_model.empty() ? "" : " (" + worst_model + ")")};
}

/// 6. Mean and variance of det(B + X)/det(B) with B at twice the truncation threshold.
inline Outcome schur_desk() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_context = 200, n_b = n_context - 1;
  const TruncationConfig cfg{1.0, 0.1};
  const double c = 2.0 * cfg.base_threshold(n_context) * std::sqrt(static_cast<double>(n_b));
  const std::vector<double> b(n_b, c);
  const auto rep = schur_experiment(b, 1.0, n_context, 2000, 7, 0.1);
  const double secs = elapsed(t0);
  return {rep.mean_ok && rep.variance_ok && secs < tol::kSchurSeconds,
          "|mean-1| " + num(std::abs(rep.mean_ratio - 1.0)) + " (4 SE " + num(4.0 * rep.standard_error) + "), var " +
              num(rep.variance) + " (cap " + num(1.5 * rep.bound) + "), " + num(secs) + " s"};
}

struct SandwichInstance {
  std::string name;
  std::vector<Complex> d;
  BlockPartition partition;
};

/// E|d - z|^p for d uniform on [lo, hi] (real interval).
inline double uniform_abs_moment(double lo, double hi, Complex z, double p) {
  static const auto rule = quad::gauss_legendre(24);
  return quad::integrate_graded(rule, lo, hi, z.real(), [&](double t) { return std::pow(std::abs(t - z), p); }) / (hi - lo);
}

inline std::vector<SandwichInstance> sandwich_instances() {
  std::vector<SandwichInstance> out;
  const double delta = 0.25;
  const std::pair<Complex, std::size_t> jordan[] = {{0.5, 60},  {Complex(0, 0.5), 200}, {0.9, 100},
                                                    {std::polar(0.9, 1.0), 200}, {1.5, 80}, {-1.5, 200}};
  for (auto [z, n] : jordan) {
    out.push_back({"jordan z=" + num(z.real()) + "+" + num(z.imag()) + "i N=" + std::to_string(n), std::vector<Complex>(n, z),
                   holder_partition(Generator::constant(z), n, delta)});
  }
  // i.i.d. uniform[lo, hi] shifted by z; beta < 0 when E log|d - z| < 0
  struct Iid {
    double lo, hi;
    Complex z;
    std::size_t n;
    std::uint64_t seed;
  };
  const Iid iid[] = {{-2, 2, 0.3, 200, 11},     {-2, 2, {0.0, 0.1}, 200, 12}, {-2, 2, 1.0, 150, 13},
                     {-4, 4, 0.5, 200, 14},     {-4, 4, {1.0, 0.5}, 120, 15}, {-1, 1, 0.0, 200, 16},
                     {-3, 3, {0.2, -0.2}, 180, 17}};
  for (const auto& c : iid) {
    auto d = sample_diagonal(DiagonalLaw::uniform(c.lo, c.hi), c.n, c.seed);
    const double elog = iid_log_moment(DiagonalLaw::uniform(c.lo, c.hi), c.z);
    const double beta = elog > 0 ? 0.5 : -1.0;
    const double p = uniform_abs_moment(c.lo, c.hi, c.z, -beta);
    for (auto& x : d) x -= c.z;
    out.push_back({"iid U[" + num(c.lo) + "," + num(c.hi) + "]-" + num(c.z.real()) + "+" + num(c.z.imag()) + "i N=" +
                       std::to_string(c.n),
                   d, iid_partition(d, delta, beta, p)});
  }
  struct Profile {
    std::string name;
    Generator f;
    Complex z;
    std::size_t n;
  };
  const Profile prof[] = {{"-1+2t", Generator::affine(-1.0, 2.0), {0.0, 0.2}, 200},
                          {"-1+2t", Generator::affine(-1.0, 2.0), 0.3, 160},
                          {"2t", Generator::affine(0.0, 2.0), 0.0, 200},
                          {"1-3t+2t^2", Generator::polynomial({1.0, -3.0, 2.0}), {0.1, 0.1}, 200},
                          {"tab", Generator::tabulated({0.2, 1.8, -0.5, 2.5}), 0.0, 150},
                          {"3t", Generator::affine(0.0, 3.0), {1.0, 0.0}, 200},
                          {"0.5+t i", Generator::affine(0.5, Complex(0, 1)), 0.0, 100}};
  for (const auto& c : prof) {
    const Generator f = c.f;
    const Complex z = c.z;
    const auto g = [f, z](double x) { return f(x) - z; };
    std::vector<Complex> d(c.n);
    for (std::size_t i = 0; i < c.n; ++i) d[i] = g(static_cast<double>(i + 1) / static_cast<double>(c.n));
    out.push_back({"profile " + c.name + " z=" + num(z.real()) + "+" + num(z.imag()) + "i N=" + std::to_string(c.n), d,
                   holder_partition(g, c.n, delta)});
  }
  return out;
}

/// 7. Two-sided sandwich of the L smallest singular values on 20 instances.
inline Outcome sandwich_desk() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto inst = sandwich_instances();
  std::vector<Theorem31Report> reps(inst.size());
  parallel_for(inst.size(), [&](std::size_t k) { reps[k] = theorem31_check(inst[k].d, inst[k].partition); });
  std::size_t failed = 0;
  std::string first_fail;
  double min_slack = kInf;  // log(smallest) - log(lower)
  for (std::size_t k = 0; k < inst.size(); ++k) {
    min_slack = std::min(min_slack, reps[k].log_product_smallest - reps[k].log_lower);
    if (!reps[k].pass) {
      ++failed;
      if (first_fail.empty()) first_fail = inst[k].name + ": " + reps[k].diagnostics;
    }
  }
  const double secs = elapsed(t0);
  return {failed == 0 && secs < tol::kSandwichSeconds && inst.size() == 20,
          std::to_string(inst.size() - failed) + "/" + std::to_string(inst.size()) + " instances hold, min log slack " +
              num(min_slack) + ", " + num(secs) + " s" + (first_fail.empty() ? "" : "; first failure " + first_fail)};
}

/// 8. Exponential rate of sigma_min of the Jordan block J_N(z).
inline Outcome jordan_rate() {
  bool ok = true;
  std::ostringstream os;
  for (double z : {0.5, 0.9}) {
    for (std::size_t n : {20, 40, 80}) {
      const auto s = linalg::smallest_singular(jordan_block(n, z), linalg::SminMode::Dense).value;
      const double e = std::abs(std::log(s) / static_cast<double>(n) - std::log(z));
      const double cap = tol::kJordanRate * std::abs(std::log(z));
      const bool pass = e <= cap;
      ok = ok && pass;
      os << "z=" << z << " N=" << n << " err " << num(e) << (pass ? "" : " > " + num(cap)) << "; ";
    }
  }
  auto d = os.str();
  d.resize(d.size() - 2);
  return {ok, d};
}

/// 9. Roots of the block symbol give eigenvectors (lambda^{d-1}, ..., 1) of the transfer matrix.
inline Outcome transfer_identity() {
  const CounterRng rng(909, streams::kTestPoints);
  std::uint64_t c = 0;
  auto gauss = [&] {
    const Complex g = rng.complex_gaussian_at(c);
    c += 2;
    return g;
  };
  double worst = 0.0;
  std::size_t roots_checked = 0;
  for (int draw = 0; draw < 200; ++draw) {
    const std::size_t deg = 1 + static_cast<std::size_t>(rng.uniform_at(c++) * 5.0);
    TwistedSymbol sym;
    for (std::size_t l = 0; l <= deg; ++l) sym.generators.push_back(Generator::affine(gauss(), gauss()));
    const std::size_t n = 256;
    const auto model = regularize(sym, n, {0.01, 0.01, 0.05});
    const auto k = std::min(model.blocks() - 1, static_cast<std::size_t>(rng.uniform_at(c++) * static_cast<double>(model.blocks())));
    const double radius = 3.0 * std::sqrt(rng.uniform_at(c++));
    const Complex z = std::polar(radius, 2.0 * kPi * rng.uniform_at(c++));
    const auto p = SymbolAtX::from_coefficients(model.coeffs[k], z);
    if (p.effective_degree == 0) continue;
    const auto t = transfer_matrix(model.coeffs[k], z, k);
    const double scale = 1.0 + linalg::operator_norm(t.matrix);
    for (auto lambda : symbol_roots(p)) {
      const auto v = transfer_eigenvector(lambda, p.effective_degree);
      auto r = t.matrix * std::span<const Complex>(v);
      for (std::size_t q = 0; q < v.size(); ++q) r[q] -= lambda * v[q];
      worst = std::max(worst, norm2(r) / scale);
      ++roots_checked;
    }
  }
  return {worst <= tol::kEigenvectorIdentity && roots_checked > 0,
          "max residual/(1+|T|) " + num(worst) + " over " + std::to_string(roots_checked) + " roots"};
}

inline CMatrix random_matrix(std::size_t n, std::size_t m, const CounterRng& rng, std::uint64_t& c) {
  CMatrix a(n, m);
  for (auto& x : a.data()) {
    x = rng.complex_gaussian_at(c);
    c += 2;
  }
  return a;
}

/// 10. Eigen, SVD and frame-product identities on random matrices.
inline Outcome linalg_oracles() {
  const CounterRng rng(1010, streams::kTestPoints);
  std::uint64_t c = 0;
  double trace_err = 0.0, det_err = 0.0, svd_err = 0.0, frame_gap = 0.0, frame_eq = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_at(c++) * 50.0);
    const auto a = random_matrix(n, n, rng, c);
    const auto eig = linalg::eigenvalues(a);
    Complex s{};
    double ls = 0.0;
    for (auto l : eig.values) {
      s += l;
      ls += std::log(std::abs(l));
    }
    trace_err = std::max(trace_err, std::abs(s - a.trace()) / (1.0 + a.frobenius_norm()));
    det_err = std::max(det_err, std::abs(std::expm1(ls - linalg::log_abs_det(a))));
    const auto sv = linalg::singular_values(a).values;
    auto gram = linalg::eigenvalues(a.adjoint() * a).values;
    std::vector<double> root(n);
    for (std::size_t k = 0; k < n; ++k) root[k] = std::sqrt(std::max(0.0, gram[k].real()));
    std::sort(root.rbegin(), root.rend());
    for (std::size_t k = 0; k < n; ++k) svd_err = std::max(svd_err, std::abs(sv[k] - root[k]) / sv[0]);
  }
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_at(c++) * 14.0);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform_at(c++) * static_cast<double>(n));
    const auto a = random_matrix(n, n, rng, c);
    const auto f = frame_product_infimum(a, std::min(k, n), 20, 5000 + static_cast<std::uint64_t>(rep));
    frame_gap = std::max(frame_gap, (f.sigma_product - f.infimum) / f.sigma_product);
    frame_eq = std::max(frame_eq, std::abs(f.singular_frame - f.sigma_product) / f.sigma_product);
  }
  const bool ok = trace_err <= tol::kTrace && det_err <= tol::kDet && svd_err <= tol::kSvd && frame_gap <= 1e-10 &&
                  frame_eq <= tol::kFrameEquality;
  return {ok, "trace " + num(trace_err) + ", det " + num(det_err) + ", svd " + num(svd_err) + ", frame deficit " +
                  num(frame_gap) + ", singular-frame gap " + num(frame_eq)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "closed form vs quadrature log potential", jensen_equivalence},
      {2, "banded Toeplitz exterior log potential", toeplitz_desk},
      {3, "Wilkinson log potential and support", wilkinson_desk},
      {4, "i.i.d. diagonal log potential", iid_desk},
      {5, "deterministic equivalent", equivalence_desk},
      {6, "determinant ratio mean and variance", schur_desk},
      {7, "small singular value sandwich", sandwich_desk},
      {8, "Jordan block smallest singular value rate", jordan_rate},
      {9, "transfer matrix eigenvector identity", transfer_identity},
      {10, "linear algebra oracles", linalg_oracles},
  };
  return all;
}

inline CriterionResult run_one(const Criterion& c) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult r{c.id, c.name, false, {}, 0.0};
  try {
    const auto o = c.run();
    r.pass = o.pass;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = elapsed(t0);
  return r;
}

/// Runs the selected criteria (all when `only` is empty).
inline std::vector<CriterionResult> run(std::span<const int> only = {}, std::FILE* progress = nullptr) {
  std::vector<CriterionResult> out;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    out.push_back(run_one(c));
    if (progress) {
      const auto& r = out.back();
      std::fprintf(progress, "[%s] %2d %-44s %8.2fs  %s\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                   r.detail.c_str());
      std::fflush(progress);
    }
  }
  return out;
}

}  // namespace nnspec::acceptance
