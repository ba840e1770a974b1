// nnspec: experiment driver. Every subcommand takes an optional JSON config
// (--config) and flat flags that override it; results go to CSV files plus a
// metadata.json sidecar in the output directory.
//
// Exit codes: 0 success, 1 failed check or runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnspec/acceptance.hpp"
#include "nnspec/nnspec.hpp"

#ifndef NNSPEC_VERSION
#define NNSPEC_VERSION "0.0.0"
#endif

namespace {

using json = nlohmann::ordered_json;
using namespace nnspec;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- scalar parsing ------------------------------------------------------

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
  return s.substr(k);
}

double parse_real(std::string s, const std::string& what) {
  s = trim(s);
  if (!s.empty() && s[0] == '+') s.erase(0, 1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) throw UsageError(what + ": not a number: '" + s + "'");
  return v;
}

/// "a", "a+bi", "a-bi", "bi", "-i".
Complex parse_complex(std::string s, const std::string& what) {
  s = trim(s);
  if (s.empty()) throw UsageError(what + ": empty complex number");
  if (s.back() != 'i' && s.back() != 'j') return {parse_real(s, what), 0.0};
  s.pop_back();
  std::size_t cut = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  const std::string re = cut == std::string::npos ? "" : s.substr(0, cut);
  std::string im = cut == std::string::npos ? s : s.substr(cut);
  double iv;
  if (im.empty() || im == "+")
    iv = 1.0;
  else if (im == "-")
    iv = -1.0;
  else
    iv = parse_real(im, what);
  return {re.empty() ? 0.0 : parse_real(re, what), iv};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// ---- JSON accessors ------------------------------------------------------

void allow_only(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw UsageError(where + ": expected a JSON object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw UsageError(where + ": unknown key '" + k + "'");
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw UsageError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

Complex to_complex(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_string()) return parse_complex(j.get<std::string>(), what);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw UsageError(what + ": expected a number, [re, im] or \"a+bi\"");
}

std::vector<Complex> to_complex_list(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw UsageError(what + ": expected a non-empty array");
  std::vector<Complex> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(to_complex(j[k], what + "[" + std::to_string(k) + "]"));
  return out;
}

double to_real(const json& j, const std::string& what) {
  if (!j.is_number()) throw UsageError(what + ": expected a number");
  return j.get<double>();
}

std::uint64_t to_uint(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw UsageError(what + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string to_string(const json& j, const std::string& what) {
  if (!j.is_string()) throw UsageError(what + ": expected a string");
  return j.get<std::string>();
}

Generator to_generator(const json& j, const std::string& what) {
  const std::string kind = to_string(need(j, "kind", what), what + ".kind");
  if (kind == "constant") {
    allow_only(j, {"kind", "value"}, what);
    return Generator::constant(to_complex(need(j, "value", what), what + ".value"));
  }
  if (kind == "affine") {
    allow_only(j, {"kind", "a", "b"}, what);
    return Generator::affine(to_complex(need(j, "a", what), what + ".a"), to_complex(need(j, "b", what), what + ".b"));
  }
  if (kind == "polynomial") {
    allow_only(j, {"kind", "coeffs"}, what);
    return Generator::polynomial(to_complex_list(need(j, "coeffs", what), what + ".coeffs"));
  }
  if (kind == "tabulated") {
    allow_only(j, {"kind", "values"}, what);
    return Generator::tabulated(to_complex_list(need(j, "values", what), what + ".values"));
  }
  throw UsageError(what + ": unknown generator kind '" + kind + "' (constant, affine, polynomial, tabulated)");
}

DiagonalLaw to_law(const json& j, const std::string& what) {
  const std::string kind = to_string(need(j, "kind", what), what + ".kind");
  try {
    if (kind == "uniform") {
      allow_only(j, {"kind", "lo", "hi"}, what);
      return DiagonalLaw::uniform(to_complex(need(j, "lo", what), what + ".lo"), to_complex(need(j, "hi", what), what + ".hi"));
    }
    if (kind == "discrete") {
      allow_only(j, {"kind", "points", "weights"}, what);
      std::vector<double> w;
      const auto& jw = need(j, "weights", what);
      if (!jw.is_array()) throw UsageError(what + ".weights: expected an array");
      for (const auto& x : jw) w.push_back(to_real(x, what + ".weights"));
      return DiagonalLaw::discrete(to_complex_list(need(j, "points", what), what + ".points"), std::move(w));
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(what + ": " + e.what());
  }
  throw UsageError(what + ": unknown law kind '" + kind + "' (uniform, discrete)");
}

// ---- configuration -------------------------------------------------------

const std::set<std::string> kModels{"toeplitz", "twisted", "bidiagonal-iid", "bidiagonal-profile", "jordan"};

const std::set<std::string> kKeys{"model",     "symbol",     "generators", "profile",  "law",       "diagonal",
                                  "z",         "n",          "gamma",      "seeds",    "model_seed", "eta",
                                  "delta1",    "delta2",     "delta3",     "regularize", "grid",    "test_points",
                                  "samples",   "smin_mode",  "partition_delta", "sample_a", "sample_b", "output"};

json defaults() {
  return {{"model", "toeplitz"},
          {"symbol", {0, 1, 1}},
          {"diagonal", 0},
          {"z", 0},
          {"n", 200},
          {"gamma", 2.0},
          {"seeds", {1}},
          {"model_seed", 0},
          {"eta", 0.1},
          {"delta1", 0.01},
          {"delta2", 0.01},
          {"delta3", 0.05},
          {"regularize", false},
          {"grid", {{"x0", -2.0}, {"x1", 2.0}, {"y0", -2.0}, {"y1", 2.0}, {"nx", 41}, {"ny", 41}}},
          {"samples", 10000},
          {"smin_mode", "auto"},
          {"partition_delta", 0.25}};
}

struct RunConfig {
  std::string model;
  std::vector<Complex> symbol;
  TwistedSymbol generators;
  Generator profile;
  std::optional<DiagonalLaw> law;
  Complex diagonal{};
  Complex z{};
  std::size_t n = 0;
  double gamma = 0.0;
  std::vector<std::uint64_t> seeds;
  std::uint64_t model_seed = 0;
  double eta = 0.1;
  RegularizationParams reg;
  bool regularize = false;
  GridSpec grid;
  std::optional<json> test_points;  // absent: command-specific default
  std::size_t samples = 0;
  linalg::SminMode smin_mode = linalg::SminMode::Auto;
  double partition_delta = 0.25;
  std::string sample_a, sample_b;
  fs::path output;
  json echo;

  /// Band width of the model's symbol.
  std::size_t band() const {
    if (model == "toeplitz") return symbol.size() - 1;
    if (model == "twisted") return generators.band();
    return 1;
  }
  /// The model as a twisted symbol, when it has one.
  std::optional<TwistedSymbol> twisted_symbol() const {
    if (model == "toeplitz") return TwistedSymbol::constant(symbol);
    if (model == "twisted") return generators;
    if (model == "jordan") return TwistedSymbol::constant({diagonal, 1.0});
    if (model == "bidiagonal-profile") return TwistedSymbol{{profile, Generator::constant(1.0)}};
    return std::nullopt;
  }
};

RunConfig resolve(json merged) {
  allow_only(merged, kKeys, "config");
  const bool has_test_points = merged.contains("test_points");
  const json defs = defaults();
  for (const auto& [k, v] : defs.items())
    if (!merged.contains(k)) merged[k] = v;
  RunConfig c;
  c.model = to_string(merged["model"], "model");
  if (!kModels.count(c.model))
    throw UsageError("model: unknown '" + c.model + "' (toeplitz, twisted, bidiagonal-iid, bidiagonal-profile, jordan)");
  c.symbol = to_complex_list(merged["symbol"], "symbol");
  if (c.model == "toeplitz" && std::all_of(c.symbol.begin(), c.symbol.end(), [](Complex a) { return a == Complex{}; }))
    throw UsageError("symbol: all coefficients vanish");
  if (c.model == "twisted") {
    const auto& g = need(merged, "generators", "config");
    if (!g.is_array() || g.empty()) throw UsageError("generators: expected a non-empty array");
    for (std::size_t k = 0; k < g.size(); ++k) c.generators.generators.push_back(to_generator(g[k], "generators[" + std::to_string(k) + "]"));
    if (std::all_of(c.generators.generators.begin(), c.generators.generators.end(), [](const Generator& f) { return f.is_zero(); }))
      throw UsageError("generators: all generators vanish");
  }
  if (c.model == "bidiagonal-profile") c.profile = to_generator(need(merged, "profile", "config"), "profile");
  if (c.model == "bidiagonal-iid") c.law = to_law(need(merged, "law", "config"), "law");
  c.diagonal = to_complex(merged["diagonal"], "diagonal");
  c.z = to_complex(merged["z"], "z");
  c.n = to_uint(merged["n"], "n");
  if (c.n < 1) throw UsageError("n: need N >= 1");
  if (c.n <= c.band()) throw UsageError("n: need N > band width " + std::to_string(c.band()));
  c.gamma = to_real(merged["gamma"], "gamma");
  if (!(c.gamma > 0.5) || !std::isfinite(c.gamma)) throw UsageError("gamma: must be a finite real > 1/2");
  const auto& seeds = merged["seeds"];
  if (!seeds.is_array() || seeds.empty()) throw UsageError("seeds: expected a non-empty array");
  for (const auto& s : seeds) c.seeds.push_back(to_uint(s, "seeds"));
  c.model_seed = to_uint(merged["model_seed"], "model_seed");
  c.eta = to_real(merged["eta"], "eta");
  if (!(c.eta > 0.0) || !std::isfinite(c.eta)) throw UsageError("eta: must be > 0");
  c.reg = {to_real(merged["delta1"], "delta1"), to_real(merged["delta2"], "delta2"), to_real(merged["delta3"], "delta3")};
  if (!merged["regularize"].is_boolean()) throw UsageError("regularize: expected true or false");
  c.regularize = merged["regularize"].get<bool>();
  if (c.regularize) {
    if (c.model != "toeplitz" && c.model != "twisted") throw UsageError("regularize: only toeplitz and twisted models");
    try {
      c.reg.validate(c.gamma, c.band());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const auto& g = merged["grid"];
  allow_only(g, {"x0", "x1", "y0", "y1", "nx", "ny"}, "grid");
  c.grid = {to_real(need(g, "x0", "grid"), "grid.x0"), to_real(need(g, "x1", "grid"), "grid.x1"),
            to_real(need(g, "y0", "grid"), "grid.y0"), to_real(need(g, "y1", "grid"), "grid.y1"),
            to_uint(need(g, "nx", "grid"), "grid.nx"), to_uint(need(g, "ny", "grid"), "grid.ny")};
  try {
    c.grid.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (has_test_points) c.test_points = merged["test_points"];
  c.samples = to_uint(merged["samples"], "samples");
  if (c.samples < 1) throw UsageError("samples: need at least 1");
  const std::string mode = to_string(merged["smin_mode"], "smin_mode");
  if (mode == "auto")
    c.smin_mode = linalg::SminMode::Auto;
  else if (mode == "dense")
    c.smin_mode = linalg::SminMode::Dense;
  else if (mode == "inverse")
    c.smin_mode = linalg::SminMode::InverseIteration;
  else
    throw UsageError("smin_mode: expected auto, dense or inverse");
  c.partition_delta = to_real(merged["partition_delta"], "partition_delta");
  if (merged.contains("sample_a")) c.sample_a = to_string(merged["sample_a"], "sample_a");
  if (merged.contains("sample_b")) c.sample_b = to_string(merged["sample_b"], "sample_b");
  if (merged.contains("output")) {
    c.output = to_string(merged["output"], "output");
  } else if (const char* env = std::getenv("NNSPEC_OUTPUT_DIR"); env && *env) {
    c.output = env;
  } else {
    c.output = "nnspec_out";
  }
  merged["output"] = c.output.string();
  c.echo = std::move(merged);
  return c;
}

std::vector<Complex> test_points(const json& spec) {
  const std::string kind = to_string(need(spec, "kind", "test_points"), "test_points.kind");
  if (kind == "ring") {
    allow_only(spec, {"kind", "count", "radius", "center"}, "test_points");
    const auto count = to_uint(need(spec, "count", "test_points"), "test_points.count");
    const double r = to_real(need(spec, "radius", "test_points"), "test_points.radius");
    if (count < 1 || !(r > 0.0)) throw UsageError("test_points: need count >= 1 and radius > 0");
    const Complex center = spec.contains("center") ? to_complex(spec["center"], "test_points.center") : Complex{};
    return test_ring(count, r, center);
  }
  if (kind == "list") {
    allow_only(spec, {"kind", "points"}, "test_points");
    return to_complex_list(need(spec, "points", "test_points"), "test_points.points");
  }
  throw UsageError("test_points: unknown kind '" + kind + "' (ring, list)");
}

const json kDefaultRing = {{"kind", "ring"}, {"count", 32}, {"radius", 4.0}};

// ---- command-line flags --------------------------------------------------

enum class FlagType { String, Uint, Real, Bool, Complex, ComplexList, UintList, Grid, Ring, Json };

struct Flags {
  std::string config_path;
  std::map<std::string, json> values;
};

json flag_to_json(FlagType t, const std::string& key, const std::string& v) {
  switch (t) {
    case FlagType::String:
      return v;
    case FlagType::Uint: {
      const double x = parse_real(v, key);
      if (x < 0 || x != std::floor(x)) throw UsageError(key + ": expected a non-negative integer");
      return static_cast<std::uint64_t>(x);
    }
    case FlagType::Real:
      return parse_real(v, key);
    case FlagType::Bool:
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw UsageError(key + ": expected true or false");
    case FlagType::Complex: {
      const Complex c = parse_complex(v, key);
      return json::array({c.real(), c.imag()});
    }
    case FlagType::ComplexList: {
      json a = json::array();
      for (const auto& s : split_list(v)) {
        const Complex c = parse_complex(s, key);
        a.push_back(json::array({c.real(), c.imag()}));
      }
      return a;
    }
    case FlagType::UintList: {
      json a = json::array();
      for (const auto& s : split_list(v)) a.push_back(flag_to_json(FlagType::Uint, key, s));
      return a;
    }
    case FlagType::Grid: {
      const auto f = split_list(v);
      if (f.size() != 6) throw UsageError(key + ": expected x0,x1,y0,y1,nx,ny");
      return {{"x0", parse_real(f[0], key)}, {"x1", parse_real(f[1], key)}, {"y0", parse_real(f[2], key)},
              {"y1", parse_real(f[3], key)}, {"nx", flag_to_json(FlagType::Uint, key, f[4])},
              {"ny", flag_to_json(FlagType::Uint, key, f[5])}};
    }
    case FlagType::Ring: {
      const auto f = split_list(v);
      if (f.size() != 2 && f.size() != 3) throw UsageError(key + ": expected count,radius[,center]");
      json r = {{"kind", "ring"}, {"count", flag_to_json(FlagType::Uint, key, f[0])}, {"radius", parse_real(f[1], key)}};
      if (f.size() == 3) r["center"] = flag_to_json(FlagType::Complex, key, f[2]);
      return r;
    }
    case FlagType::Json:
      try {
        return json::parse(v);
      } catch (const json::parse_error& e) {
        throw UsageError(key + ": invalid JSON: " + e.what());
      }
  }
  return {};
}

void add_flags(CLI::App* sub, Flags& flags) {
  sub->add_option("-c,--config", flags.config_path, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
  struct Spec {
    const char* names;
    const char* key;
    FlagType type;
    const char* help;
  };
  static const Spec specs[] = {
      {"-m,--model", "model", FlagType::String, "toeplitz | twisted | bidiagonal-iid | bidiagonal-profile | jordan"},
      {"--symbol", "symbol", FlagType::ComplexList, "Toeplitz coefficients a0,a1,... (complex as a+bi)"},
      {"--generators", "generators", FlagType::Json, "twisted diagonals as a JSON array of generators"},
      {"--profile", "profile", FlagType::Json, "bidiagonal profile as a JSON generator"},
      {"--law", "law", FlagType::Json, "i.i.d. diagonal law as JSON"},
      {"--diagonal", "diagonal", FlagType::Complex, "Jordan block diagonal value"},
      {"-z,--point", "z", FlagType::Complex, "evaluation point"},
      {"-n,--size", "n", FlagType::Uint, "matrix dimension N"},
      {"-g,--gamma", "gamma", FlagType::Real, "noise exponent (> 1/2)"},
      {"-s,--seeds", "seeds", FlagType::UintList, "noise seeds s1,s2,..."},
      {"--model-seed", "model_seed", FlagType::Uint, "seed for random model ingredients"},
      {"--eta", "eta", FlagType::Real, "truncation exponent eta"},
      {"--delta1", "delta1", FlagType::Real, "regularization delta1"},
      {"--delta2", "delta2", FlagType::Real, "regularization delta2"},
      {"--delta3", "delta3", FlagType::Real, "regularization delta3"},
      {"--regularize", "regularize", FlagType::Bool, "use the block-regularized model"},
      {"--grid", "grid", FlagType::Grid, "x0,x1,y0,y1,nx,ny"},
      {"--ring", "test_points", FlagType::Ring, "test points on a circle: count,radius[,center]"},
      {"--test-points", "test_points", FlagType::Json, "test points as JSON"},
      {"--samples", "samples", FlagType::Uint, "number of limit-law samples"},
      {"--smin-mode", "smin_mode", FlagType::String, "auto | dense | inverse"},
      {"--partition-delta", "partition_delta", FlagType::Real, "block partition exponent"},
      {"--sample-a", "sample_a", FlagType::String, "first sample CSV (re,im)"},
      {"--sample-b", "sample_b", FlagType::String, "second sample CSV (re,im)"},
      {"-o,--output", "output", FlagType::String, "output directory (default $NNSPEC_OUTPUT_DIR)"},
  };
  for (const auto& s : specs) {
    sub->add_option_function<std::string>(
        s.names, [&flags, s](const std::string& v) { flags.values[s.key] = flag_to_json(s.type, s.key, v); }, s.help);
  }
}

RunConfig load(const Flags& flags) {
  json merged = json::object();
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw UsageError("cannot open config " + flags.config_path);
    try {
      merged = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(flags.config_path + ": invalid JSON: " + e.what());
    }
    if (!merged.is_object()) throw UsageError(flags.config_path + ": top level must be an object");
  }
  for (const auto& [k, v] : flags.values) merged[k] = v;
  return resolve(std::move(merged));
}

// ---- commands ------------------------------------------------------------

class Run {
 public:
  Run(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg), t0_(std::chrono::steady_clock::now()) {
    fs::create_directories(cfg.output);
  }
  fs::path file(const std::string& name) {
    outputs_.push_back(name);
    return cfg_.output / name;
  }
  json& summary() { return summary_; }
  void finish() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    json meta = {{"command", command_},
                 {"version", NNSPEC_VERSION},
                 {"config", cfg_.echo},
                 {"outputs", outputs_},
                 {"summary", summary_},
                 {"threads", default_threads()},
                 {"wall_time_seconds", secs}};
    std::ofstream out(cfg_.output / "metadata.json");
    out << meta.dump(2) << '\n';
    if (!out) throw Error("write failed for " + (cfg_.output / "metadata.json").string());
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> outputs_;
  json summary_ = json::object();
};

std::vector<Complex> model_diagonal(const RunConfig& c) {
  if (c.model == "jordan") return std::vector<Complex>(c.n, c.diagonal);
  if (c.model == "bidiagonal-iid") return sample_diagonal(*c.law, c.n, c.model_seed);
  return sample_diagonal(DiagonalLaw::profile(c.profile), c.n, c.model_seed);
}

CMatrix build_model(const RunConfig& c) {
  if (c.model == "toeplitz") {
    return c.regularize ? build_regularized(TwistedSymbol::constant(c.symbol), c.n, c.reg) : build_banded_toeplitz(c.symbol, c.n);
  }
  if (c.model == "twisted") return c.regularize ? build_regularized(c.generators, c.n, c.reg) : build_twisted(c.generators, c.n);
  return build_bidiagonal(model_diagonal(c));
}

int cmd_simulate(const RunConfig& c) {
  Run run("simulate", c);
  const auto m = build_model(c);
  std::vector<SpectrumSample> out(c.seeds.size());
  parallel_for(c.seeds.size(), [&](std::size_t k) {
    out[k] = esd(perturb(m, {c.gamma, c.seeds[k]}), {c.gamma, c.seeds[k], c.model});
  });
  for (std::size_t k = 0; k < out.size(); ++k)
    io::write_points(run.file("esd_seed" + std::to_string(c.seeds[k]) + ".csv"), out[k].points);
  run.summary()["eigenvalues_per_seed"] = c.n;
  run.finish();
  return 0;
}

int cmd_predict(const RunConfig& c) {
  Run run("predict", c);
  const auto zs = test_points(c.test_points.value_or(kDefaultRing));
  const auto sym = c.twisted_symbol();
  if (sym) {
    io::write_points(run.file("predicted_samples.csv"), sample_limit_law(*sym, c.samples, c.seeds.front()));
  } else {
    run.summary()["samples"] = "not available for i.i.d. diagonal laws";
  }
  std::vector<double> v(zs.size());
  std::vector<char> refused(zs.size(), 0);
  parallel_for(zs.size(), [&](std::size_t k) {
    try {
      if (c.model == "bidiagonal-iid")
        v[k] = limit_logpot_iid(*c.law, zs[k]);
      else if (sym->is_constant())
        v[k] = limit_logpot_toeplitz(sym->constant_coefficients(), zs[k]);
      else
        v[k] = limit_logpot_twisted(*sym, zs[k]);
    } catch (const Error&) {
      v[k] = std::numeric_limits<double>::quiet_NaN();
      refused[k] = 1;
    }
  });
  io::CsvWriter w(run.file("predicted_logpot.csv"));
  w.header({"re", "im", "logpot", "status"});
  for (std::size_t k = 0; k < zs.size(); ++k) w.row(zs[k].real(), zs[k].imag(), v[k], refused[k] ? "refused" : "ok");
  w.close();
  run.summary()["refused_points"] = std::count(refused.begin(), refused.end(), 1);
  run.finish();
  return 0;
}

int cmd_detequiv(const RunConfig& c) {
  Run run("detequiv", c);
  const auto rep = equivalence_report(build_model(c), c.z, {c.gamma, c.eta}, c.seeds);
  io::write_equivalence(run.file("equivalence.csv"), rep);
  run.summary() = {{"n_star", rep.truncation.n_star},
                   {"alpha_hat", rep.truncation.alpha_hat},
                   {"g_value", rep.truncation.g_value},
                   {"mean_abs_discrepancy", rep.mean_abs_discrepancy},
                   {"max_abs_discrepancy", rep.max_abs_discrepancy},
                   {"infinite_replicas", rep.infinite}};
  run.finish();
  return 0;
}

/// E|d - z|^p for the i.i.d. law.
double abs_moment(const DiagonalLaw& law, Complex z, double p) {
  if (law.kind() == DiagonalLaw::Kind::Discrete) {
    double s = 0.0;
    for (std::size_t k = 0; k < law.points().size(); ++k) s += law.weights()[k] * std::pow(std::abs(law.points()[k] - z), p);
    return s;
  }
  const Complex span = law.hi() - law.lo();
  const Complex w = (z - law.lo()) / span;
  static const auto rule = quad::gauss_legendre(24);
  return std::pow(std::abs(span), p) * quad::integrate_graded(rule, 0.0, 1.0, w.real(), [&](double t) { return std::pow(std::abs(w - t), p); });
}

int cmd_rigidity(const RunConfig& c) {
  if (c.model != "jordan" && c.model != "bidiagonal-iid" && c.model != "bidiagonal-profile")
    throw UsageError("rigidity: model must be jordan, bidiagonal-iid or bidiagonal-profile");
  if (c.n > 400) throw UsageError("rigidity: need N <= 400");
  Run run("rigidity", c);
  auto d = model_diagonal(c);
  for (auto& x : d) x -= c.z;
  BlockPartition part;
  if (c.model == "bidiagonal-iid") {
    if (!(c.partition_delta > 0.0 && c.partition_delta < 0.5)) throw UsageError("partition_delta: must lie in (0, 1/2)");
    const double beta = iid_log_moment(*c.law, c.z) > 0.0 ? 0.5 : -1.0;
    const double p = abs_moment(*c.law, c.z, -beta);
    part = iid_partition(d, c.partition_delta, beta, p);
    run.summary()["beta"] = beta;
    run.summary()["p_beta"] = p;
  } else {
    if (!(c.partition_delta > 0.0 && c.partition_delta < 1.0)) throw UsageError("partition_delta: must lie in (0, 1)");
    const Generator f = c.model == "jordan" ? Generator::constant(c.diagonal) : c.profile;
    const Complex z = c.z;
    part = holder_partition([&f, z](double x) { return f(x) - z; }, c.n, c.partition_delta);
  }
  const auto rep = theorem31_check(d, part);
  const std::vector<io::RigidityRow> rows{{c.model, rep}};
  io::write_rigidity(run.file("rigidity.csv"), rows);
  run.summary()["blocks"] = rep.blocks;
  run.summary()["pass"] = rep.pass;
  run.summary()["warnings"] = part.warnings;
  if (!rep.pass) run.summary()["diagnostics"] = rep.diagnostics;
  run.finish();
  if (!rep.pass) {
    std::fprintf(stderr, "rigidity check failed: %s\n", rep.diagnostics.c_str());
    return 1;
  }
  return 0;
}

int cmd_pseudospec(const RunConfig& c) {
  Run run("pseudospec", c);
  const auto g = pseudospectrum_grid(build_model(c), c.grid, c.smin_mode);
  io::write_grid(run.file("grid.csv"), g);
  run.summary() = {{"nx", g.spec.nx}, {"ny", g.spec.ny}, {"failures", g.failures}};
  run.finish();
  return 0;
}

int cmd_compare(const RunConfig& c) {
  if (c.sample_a.empty() || c.sample_b.empty()) throw UsageError("compare: need sample_a and sample_b");
  std::vector<Complex> a, b;
  try {
    a = io::read_points(c.sample_a);
    b = io::read_points(c.sample_b);
  } catch (const io::SchemaError& e) {
    throw UsageError(std::string("schema error: ") + e.what());
  }
  if (a.empty() || b.empty()) throw UsageError("compare: sample files must contain at least one point");
  std::vector<Complex> zs;
  if (c.test_points) {
    zs = test_points(*c.test_points);
  } else {
    double r = 0.0;
    for (auto p : a) r = std::max(r, std::abs(p));
    for (auto p : b) r = std::max(r, std::abs(p));
    zs = test_ring(32, r + 1.0);
  }
  Run run("compare", c);
  const auto rep = compare_measures(a, b, zs);
  io::write_compare(run.file("compare.csv"), rep);
  run.summary() = {{"logpot_rmse", rep.logpot_rmse},
                   {"radial_wasserstein", rep.radial_wasserstein},
                   {"angular_ks", rep.angular_ks},
                   {"support_coverage", rep.support_coverage},
                   {"excluded_test_points", rep.excluded}};
  run.finish();
  return 0;
}

int cmd_accept(const std::vector<int>& only) {
  const auto results = acceptance::run(only, stdout);
  if (results.empty()) throw UsageError("accept: no criterion selected");
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.pass ? 0 : 1;
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nnspec: spectra of noisy non-normal matrices"};
  app.set_version_flag("--version", std::string(NNSPEC_VERSION));
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&);
  };
  const Sub subs[] = {
      {"simulate", "eigenvalues of the perturbed model, one CSV per seed", cmd_simulate},
      {"predict", "samples and log potential of the predicted limit law", cmd_predict},
      {"detequiv", "noisy log-determinant against its deterministic equivalent", cmd_detequiv},
      {"rigidity", "small singular values of D + J against the witness bounds", cmd_rigidity},
      {"pseudospec", "smallest singular value of M - z on a grid", cmd_pseudospec},
      {"compare", "distances between two planar samples", cmd_compare},
  };
  std::vector<Flags> flags(std::size(subs));
  std::vector<CLI::App*> apps;
  for (std::size_t k = 0; k < std::size(subs); ++k) {
    auto* sub = app.add_subcommand(subs[k].name, subs[k].help);
    add_flags(sub, flags[k]);
    apps.push_back(sub);
  }
  std::vector<int> only;
  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  accept->add_option("--only", only, "criterion ids to run (default all)");

  try {
    app.parse(argc, argv);
    if (accept->parsed()) return cmd_accept(only);
    for (std::size_t k = 0; k < apps.size(); ++k)
      if (apps[k]->parsed()) return subs[k].fn(load(flags[k]));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
