#pragma once

// CSV emission and parsing. Numbers are written with 17 significant digits
// so that every double round-trips.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "detequiv.hpp"
#include "rigidity.hpp"
#include "spectra.hpp"

namespace nnspec::io {

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : path_(path), out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
  }
  void header(std::initializer_list<std::string_view> cols) {
    bool first = true;
    for (auto c : cols) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }
  template <class... Ts>
  void row(const Ts&... xs) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(xs), first = false), ...);
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw Error("write failed for " + path_.string());
  }
  ~CsvWriter() = default;

 private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I x) { return std::to_string(x); }

  std::filesystem::path path_;
  std::ofstream out_;
};

/// Zero-suppressed dump: header i,j,re,im, 0-based indices.
inline void write_matrix(const std::filesystem::path& path, const CMatrix& m) {
  CsvWriter w(path);
  w.header({"i", "j", "re", "im"});
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) != Complex{}) w.row(i, j, m(i, j).real(), m(i, j).imag());
  w.close();
}

inline void write_points(const std::filesystem::path& path, std::span<const Complex> pts) {
  CsvWriter w(path);
  w.header({"re", "im"});
  for (auto p : pts) w.row(p.real(), p.imag());
  w.close();
}

inline void write_grid(const std::filesystem::path& path, const GridField& g) {
  CsvWriter w(path);
  w.header({"x", "y", "sigma_min"});
  for (std::size_t j = 0; j < g.spec.ny; ++j)
    for (std::size_t i = 0; i < g.spec.nx; ++i) w.row(g.spec.x(i), g.spec.y(j), g.at(i, j));
  w.close();
}

inline void write_equivalence(const std::filesystem::path& path, const EquivalenceReport& rep) {
  CsvWriter w(path);
  w.header({"seed", "logdet_empirical", "g_value", "discrepancy"});
  for (const auto& r : rep.rows) w.row(r.seed, r.logdet_empirical, r.g_value, r.discrepancy);
  w.close();
}

struct RigidityRow {
  std::string instance;
  Theorem31Report report;
};

/// lhs, product_witness and rhs are natural logs of the three sides.
inline void write_rigidity(const std::filesystem::path& path, std::span<const RigidityRow> rows) {
  CsvWriter w(path);
  w.header({"instance", "sigma_NL", "Dfrak_inv", "lhs", "product_witness", "rhs", "pass"});
  for (const auto& r : rows)
    w.row(r.instance, r.report.sigma_nl, r.report.dfrak_inv, r.report.log_lower, r.report.log_product_witness,
          r.report.log_product_smallest, r.report.pass);
  w.close();
}

inline void write_compare(const std::filesystem::path& path, const CompareReport& r) {
  CsvWriter w(path);
  w.header({"logpot_rmse", "logpot_max", "radial_wasserstein", "angular_ks", "support_coverage", "test_points_used",
            "test_points_excluded"});
  w.row(r.logpot_rmse, r.logpot_max, r.radial_wasserstein, r.angular_ks, r.support_coverage, r.test_points_used,
        r.excluded.size());
  w.close();
}

class SchemaError : public Error {
 public:
  using Error::Error;
};

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto c = line.find(',', pos);
    out.emplace_back(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInf;
  if (s == "-inf") return kNegInf;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw SchemaError(where + ": not a number: '" + s + "'");
  return v;
}

/// Reads a points CSV with header re,im.
inline std::vector<Complex> read_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file");
  if (split(line) != std::vector<std::string>{"re", "im"})
    throw SchemaError(path.string() + ": expected header 're,im', got '" + line + "'");
  std::vector<Complex> pts;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() != 2) throw SchemaError(where + ": expected 2 fields");
    pts.emplace_back(parse_double(f[0], where), parse_double(f[1], where));
  }
  return pts;
}

}  // namespace nnspec::io
