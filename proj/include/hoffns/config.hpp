#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hoffns/errors.hpp"
#include "hoffns/initial_data.hpp"
#include "hoffns/scalar_laws.hpp"
#include "hoffns/tensor4.hpp"

namespace hoffns {

struct TensorSpec {
  std::string preset = "zero";  // zero | scaled_identity | random_symmetric | isotropic | table
  double c = 0.0;
  std::uint64_t seed = 0;
  double amp = 0.0;
  double mu_t = 0.0;
  double lambda_t = 0.0;
  std::vector<double> table;
  std::string time = "const";   // const | sin
  double omega = 1.0;
  double time_offset = 0.0;
  std::string space = "const";  // const | cos_profile
  int axis = 1;                 // 1-based
  double space_offset = 0.0;
};

struct RunConfig {
  std::string scenario = "unnamed";
  int d = 2;
  int n = 64;
  PressureLaw law;
  double mu = 1.0;
  double lambda = 0.0;
  TensorSpec tensor;
  double delta = 0.1;
  std::vector<double> deltas;
  double eta = 0.1;
  double c0 = 1.0;
  double C_tilde = 10.0;
  InitialSpec initial;
  double cfl = 0.4;
  double t_end = 1.0;
  double cadence = 0.05;
  double rho_floor = 1e-6;
  bool dealias = true;
  bool regularize = true;
  double sweep_t0 = 0.25;
  std::string output_dir = "out";
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_tokens(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == ',' || c == '(' || c == ')' || c == '\t') c = ' ';
  std::istringstream is(t);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end == v.c_str() || *end != '\0') throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

inline long parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || end == v.c_str() || *end != '\0') throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& w : split_tokens(v)) out.push_back(parse_double(key, w));
  return out;
}

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? " " : "") + fmt_double(xs[i]);
  return s;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> k = {
      "scenario.name",     "grid.d",           "grid.n",          "law.a",           "law.gamma",
      "law.M",             "viscosity.mu",     "viscosity.lambda", "tensor.preset",  "tensor.table",
      "tensor.time",       "tensor.time_offset", "tensor.space",  "tensor.space_offset", "mollifier.delta",
      "mollifier.deltas",  "constants.eta",    "constants.c0",    "constants.C_tilde", "initial.data",
      "solver.cfl",        "solver.t_end",     "solver.cadence",  "solver.rho_floor", "solver.dealias",
      "solver.regularize", "solver.sweep_t0",  "output.dir"};
  return k;
}

inline void parse_tensor_preset(TensorSpec& t, const std::string& v) {
  const std::string key = "tensor.preset";
  auto w = split_tokens(v);
  if (w.empty()) throw ConfigError(key, "empty preset");
  t.preset = w[0];
  auto need = [&](std::size_t n) {
    if (w.size() != n + 1) throw ConfigError(key, "'" + w[0] + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (t.preset == "zero" || t.preset == "table") {
    need(0);
  } else if (t.preset == "scaled_identity") {
    need(1);
    t.c = parse_double(key, w[1]);
  } else if (t.preset == "random_symmetric") {
    need(2);
    long s = parse_int(key, w[1]);
    if (s < 0) throw ConfigError(key, "seed must be nonnegative");
    t.seed = static_cast<std::uint64_t>(s);
    t.amp = parse_double(key, w[2]);
  } else if (t.preset == "isotropic") {
    need(2);
    t.mu_t = parse_double(key, w[1]);
    t.lambda_t = parse_double(key, w[2]);
  } else {
    throw ConfigError(key, "unknown preset '" + w[0] + "'");
  }
}

inline std::string preset_string(const TensorSpec& t) {
  if (t.preset == "scaled_identity") return "scaled_identity " + fmt_double(t.c);
  if (t.preset == "random_symmetric") return "random_symmetric " + std::to_string(t.seed) + " " + fmt_double(t.amp);
  if (t.preset == "isotropic") return "isotropic " + fmt_double(t.mu_t) + " " + fmt_double(t.lambda_t);
  return t.preset;
}

inline void parse_initial(InitialSpec& s, const std::string& v) {
  const std::string key = "initial.data";
  auto w = split_tokens(v);
  if (w.empty()) throw ConfigError(key, "empty initial data");
  s = InitialSpec{};
  s.kind = w[0];
  auto need = [&](std::size_t n) {
    if (w.size() != n + 1) throw ConfigError(key, "'" + w[0] + "' takes " + std::to_string(n) + " argument(s)");
  };
  if (s.kind == "equilibrium") {
    need(0);
  } else if (s.kind == "acoustic" || s.kind == "shear") {
    need(2);
    s.k = static_cast<int>(parse_int(key, w[1]));
    s.eps = parse_double(key, w[2]);
  } else if (s.kind == "density_bump") {
    need(1);
    s.eps = parse_double(key, w[1]);
  } else if (s.kind == "random_bandlimited") {
    need(3);
    long seed = parse_int(key, w[1]);
    if (seed < 0) throw ConfigError(key, "seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.kmax = static_cast<int>(parse_int(key, w[2]));
    s.eps = parse_double(key, w[3]);
  } else {
    throw ConfigError(key, "unknown initial data '" + w[0] + "'");
  }
}

inline std::string initial_string(const InitialSpec& s) {
  if (s.kind == "acoustic" || s.kind == "shear") return s.kind + "(" + std::to_string(s.k) + ", " + fmt_double(s.eps) + ")";
  if (s.kind == "density_bump") return s.kind + "(" + fmt_double(s.eps) + ")";
  if (s.kind == "random_bandlimited")
    return s.kind + "(" + std::to_string(s.seed) + ", " + std::to_string(s.kmax) + ", " + fmt_double(s.eps) + ")";
  return s.kind;
}

}  // namespace detail

/// Checks every precondition that can be decided before any compute.
inline void validate(const RunConfig& c) {
  if (c.d != 2 && c.d != 3) throw ConfigError("grid.d", "must be 2 or 3");
  if (c.n < 4 || (c.n & (c.n - 1)) != 0) throw ConfigError("grid.n", "must be a power of two >= 4");
  try {
    c.law.validate(c.d);
  } catch (const std::exception& e) {
    throw ConfigError("law", e.what());
  }
  if (!(c.mu > 0.0)) throw ConfigError("viscosity.mu", "must be positive");
  if (!(c.mu + c.lambda >= 0.0)) throw ConfigError("viscosity.lambda", "mu + lambda must be nonnegative");
  const auto& t = c.tensor;
  if (t.preset == "table" && t.table.size() != static_cast<std::size_t>(c.d * c.d * c.d * c.d)) {
    throw ConfigError("tensor.table", "needs d^4 = " + std::to_string(c.d * c.d * c.d * c.d) + " entries, got " +
                                          std::to_string(t.table.size()));
  }
  if (t.time != "const" && t.time != "sin") throw ConfigError("tensor.time", "expected 'const' or 'sin omega'");
  if (t.space != "const" && t.space != "cos_profile") {
    throw ConfigError("tensor.space", "expected 'const' or 'cos_profile axis'");
  }
  if (t.space == "cos_profile" && (t.axis < 1 || t.axis > c.d)) throw ConfigError("tensor.space", "axis out of range");
  if (!(c.delta > 0.0 && c.delta < c.law.M)) throw ConfigError("mollifier.delta", "must lie in (0, M)");
  for (double dl : c.deltas)
    if (!(dl > 0.0 && dl < c.law.M)) throw ConfigError("mollifier.deltas", "every value must lie in (0, M)");
  if (!(c.eta > 0.0)) throw ConfigError("constants.eta", "must be positive");
  if (!(c.c0 > 0.0)) throw ConfigError("constants.c0", "must be positive");
  if (!(c.C_tilde > 0.0)) throw ConfigError("constants.C_tilde", "must be positive");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw ConfigError("solver.cfl", "must lie in (0, 1]");
  if (!(c.t_end >= 0.0)) throw ConfigError("solver.t_end", "must be nonnegative");
  if (!(c.cadence > 0.0)) throw ConfigError("solver.cadence", "must be positive");
  if (!(c.rho_floor >= 0.0)) throw ConfigError("solver.rho_floor", "must be nonnegative");
  if (!(c.sweep_t0 >= 0.0)) throw ConfigError("solver.sweep_t0", "must be nonnegative");
  if (c.initial.kind == "random_bandlimited" && c.initial.kmax < 1) throw ConfigError("initial.data", "kmax must be >= 1");
  if (c.initial.eps < 0.0) throw ConfigError("initial.data", "amplitude must be nonnegative");
  const bool needs_k = c.initial.kind == "acoustic" || c.initial.kind == "shear";
  if (needs_k && (c.initial.k < 1 || 3 * c.initial.k > c.n)) throw ConfigError("initial.data", "wavenumber k must lie in [1, n/3]");
  if (c.initial.kind == "density_bump" && !(c.initial.eps < 1.0)) throw ConfigError("initial.data", "bump amplitude must be < 1");
  if (c.scenario.empty()) throw ConfigError("scenario.name", "must not be empty");
}

inline RunConfig config_from_ptree(const boost::property_tree::ptree& pt) {
  for (const auto& sec : pt) {
    if (sec.second.empty() && !sec.second.data().empty()) {
      throw ConfigError(sec.first, "key outside of any section");
    }
    for (const auto& kv : sec.second) {
      const std::string key = sec.first + "." + kv.first;
      if (!detail::known_keys().count(key)) throw ConfigError(key, "unknown key");
    }
  }
  RunConfig c;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = pt.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) return *v;
    return std::nullopt;
  };
  using namespace detail;
  if (auto v = get("scenario.name")) c.scenario = *v;
  if (auto v = get("grid.d")) c.d = static_cast<int>(parse_int("grid.d", *v));
  if (auto v = get("grid.n")) c.n = static_cast<int>(parse_int("grid.n", *v));
  if (auto v = get("law.a")) c.law.a = parse_double("law.a", *v);
  if (auto v = get("law.gamma")) c.law.gamma = parse_double("law.gamma", *v);
  if (auto v = get("law.M")) c.law.M = parse_double("law.M", *v);
  if (auto v = get("viscosity.mu")) c.mu = parse_double("viscosity.mu", *v);
  if (auto v = get("viscosity.lambda")) c.lambda = parse_double("viscosity.lambda", *v);
  if (auto v = get("tensor.preset")) parse_tensor_preset(c.tensor, *v);
  if (auto v = get("tensor.table")) c.tensor.table = parse_list("tensor.table", *v);
  if (auto v = get("tensor.time")) {
    auto w = split_tokens(*v);
    if (w.empty()) throw ConfigError("tensor.time", "empty value");
    c.tensor.time = w[0];
    if (w[0] == "sin") {
      if (w.size() != 2) throw ConfigError("tensor.time", "'sin' takes one argument (omega)");
      c.tensor.omega = parse_double("tensor.time", w[1]);
    } else if (w.size() != 1) {
      throw ConfigError("tensor.time", "'" + w[0] + "' takes no argument");
    }
  }
  if (auto v = get("tensor.time_offset")) c.tensor.time_offset = parse_double("tensor.time_offset", *v);
  if (auto v = get("tensor.space")) {
    auto w = split_tokens(*v);
    if (w.empty()) throw ConfigError("tensor.space", "empty value");
    c.tensor.space = w[0];
    if (w[0] == "cos_profile") {
      if (w.size() != 2) throw ConfigError("tensor.space", "'cos_profile' takes one argument (axis)");
      c.tensor.axis = static_cast<int>(parse_int("tensor.space", w[1]));
    } else if (w.size() != 1) {
      throw ConfigError("tensor.space", "'" + w[0] + "' takes no argument");
    }
  }
  if (auto v = get("tensor.space_offset")) c.tensor.space_offset = parse_double("tensor.space_offset", *v);
  if (auto v = get("mollifier.delta")) c.delta = parse_double("mollifier.delta", *v);
  if (auto v = get("mollifier.deltas")) c.deltas = parse_list("mollifier.deltas", *v);
  if (auto v = get("constants.eta")) c.eta = parse_double("constants.eta", *v);
  if (auto v = get("constants.c0")) c.c0 = parse_double("constants.c0", *v);
  if (auto v = get("constants.C_tilde")) c.C_tilde = parse_double("constants.C_tilde", *v);
  if (auto v = get("initial.data")) parse_initial(c.initial, *v);
  if (auto v = get("solver.cfl")) c.cfl = parse_double("solver.cfl", *v);
  if (auto v = get("solver.t_end")) c.t_end = parse_double("solver.t_end", *v);
  if (auto v = get("solver.cadence")) c.cadence = parse_double("solver.cadence", *v);
  if (auto v = get("solver.rho_floor")) c.rho_floor = parse_double("solver.rho_floor", *v);
  if (auto v = get("solver.dealias")) c.dealias = parse_bool("solver.dealias", *v);
  if (auto v = get("solver.regularize")) c.regularize = parse_bool("solver.regularize", *v);
  if (auto v = get("solver.sweep_t0")) c.sweep_t0 = parse_double("solver.sweep_t0", *v);
  if (auto v = get("output.dir")) c.output_dir = *v;
  validate(c);
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  return config_from_ptree(pt);
}

/// Reads an INI config; OUTPUT_DIR in the environment overrides output.dir.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_config_string(ss.str());
  if (const char* od = std::getenv("OUTPUT_DIR"); od && *od) c.output_dir = od;
  return c;
}

inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt_double;
  std::ostringstream os;
  os << "[scenario]\nname = " << c.scenario << "\n\n";
  os << "[grid]\n; dimension and points per axis on [0, 2pi)^d\nd = " << c.d << "\nn = " << c.n << "\n\n";
  os << "[law]\n; p = a rho^gamma, M = mean density\na = " << fmt_double(c.law.a) << "\ngamma = " << fmt_double(c.law.gamma)
     << "\nM = " << fmt_double(c.law.M) << "\n\n";
  os << "[viscosity]\nmu = " << fmt_double(c.mu) << "\nlambda = " << fmt_double(c.lambda) << "\n\n";
  os << "[tensor]\npreset = " << detail::preset_string(c.tensor) << "\n";
  if (!c.tensor.table.empty()) os << "table = " << detail::join(c.tensor.table) << "\n";
  os << "time = " << (c.tensor.time == "sin" ? "sin " + fmt_double(c.tensor.omega) : c.tensor.time) << "\n";
  os << "time_offset = " << fmt_double(c.tensor.time_offset) << "\n";
  os << "space = " << (c.tensor.space == "cos_profile" ? "cos_profile " + std::to_string(c.tensor.axis) : c.tensor.space)
     << "\n";
  os << "space_offset = " << fmt_double(c.tensor.space_offset) << "\n\n";
  os << "[mollifier]\ndelta = " << fmt_double(c.delta) << "\n";
  if (!c.deltas.empty()) os << "deltas = " << detail::join(c.deltas) << "\n";
  os << "\n[constants]\neta = " << fmt_double(c.eta) << "\nc0 = " << fmt_double(c.c0)
     << "\nC_tilde = " << fmt_double(c.C_tilde) << "\n\n";
  os << "[initial]\ndata = " << detail::initial_string(c.initial) << "\n\n";
  os << "[solver]\ncfl = " << fmt_double(c.cfl) << "\nt_end = " << fmt_double(c.t_end)
     << "\ncadence = " << fmt_double(c.cadence) << "\nrho_floor = " << fmt_double(c.rho_floor)
     << "\ndealias = " << (c.dealias ? "true" : "false") << "\nregularize = " << (c.regularize ? "true" : "false")
     << "\nsweep_t0 = " << fmt_double(c.sweep_t0) << "\n\n";
  os << "[output]\ndir = " << c.output_dir << "\n";
  return os.str();
}

inline bool operator==(const TensorSpec& a, const TensorSpec& b) {
  return a.preset == b.preset && a.c == b.c && a.seed == b.seed && a.amp == b.amp && a.mu_t == b.mu_t &&
         a.lambda_t == b.lambda_t && a.table == b.table && a.time == b.time && a.omega == b.omega &&
         a.time_offset == b.time_offset && a.space == b.space && a.axis == b.axis && a.space_offset == b.space_offset;
}

inline bool operator==(const InitialSpec& a, const InitialSpec& b) {
  return a.kind == b.kind && a.k == b.k && a.eps == b.eps && a.seed == b.seed && a.kmax == b.kmax;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.scenario == b.scenario && a.d == b.d && a.n == b.n && a.law.a == b.law.a && a.law.gamma == b.law.gamma &&
         a.law.M == b.law.M && a.mu == b.mu && a.lambda == b.lambda && a.tensor == b.tensor && a.delta == b.delta &&
         a.deltas == b.deltas && a.eta == b.eta && a.c0 == b.c0 && a.C_tilde == b.C_tilde && a.initial == b.initial &&
         a.cfl == b.cfl && a.t_end == b.t_end && a.cadence == b.cadence && a.rho_floor == b.rho_floor &&
         a.dealias == b.dealias && a.regularize == b.regularize && a.sweep_t0 == b.sweep_t0 &&
         a.output_dir == b.output_dir;
}

/// Builds the viscosity tensor described by the config (no hypothesis checks).
inline ViscosityTensor build_tensor(const RunConfig& c) {
  const TensorSpec& s = c.tensor;
  ViscosityTensor T;
  if (s.preset == "zero") T = zero_tensor(c.d, c.mu, c.lambda);
  else if (s.preset == "scaled_identity") T = scaled_identity_tensor(c.d, c.mu, c.lambda, s.c);
  else if (s.preset == "random_symmetric") T = random_symmetric_tensor(c.d, c.mu, c.lambda, s.seed, s.amp);
  else if (s.preset == "isotropic") T = isotropic_tensor(c.d, c.mu, c.lambda, s.mu_t, s.lambda_t);
  else if (s.preset == "table") T = table_tensor(c.d, c.mu, c.lambda, s.table);
  else throw ConfigError("tensor.preset", "unknown preset '" + s.preset + "'");
  if (s.time == "sin") {
    T.time.kind = TimeModulation::Kind::Sine;
    T.time.omega = s.omega;
    T.time.offset = s.time_offset;
  }
  if (s.space == "cos_profile") {
    T.space.kind = SpaceModulation::Kind::CosineProfile;
    T.space.axis = s.axis - 1;
    T.space.offset = s.space_offset;
  }
  return T;
}

}  // namespace hoffns
