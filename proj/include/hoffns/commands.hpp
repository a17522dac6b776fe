#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "hoffns/config.hpp"
#include "hoffns/diagnostics.hpp"
#include "hoffns/initial_data.hpp"
#include "hoffns/solver.hpp"
#include "hoffns/spectral.hpp"
#include "hoffns/tensor4.hpp"

namespace hoffns {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 1;
inline constexpr int runtime = 2;
inline constexpr int acceptance = 3;
}  // namespace exit_code

using Json = nlohmann::ordered_json;

namespace detail {

inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

inline std::string csv_text(const std::vector<DiagnosticsRecord>& rows) {
  std::string s;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
  for (const DiagnosticsRecord& r : rows) {
    const auto vals = record_values(r);
    for (std::size_t i = 0; i < vals.size(); ++i) s += (i ? "," : "") + fmt_double(vals[i]);
    s += "\n";
  }
  return s;
}

}  // namespace detail

// ---- hypothesis check ------------------------------------------------------

/// Sample sets used for the hypothesis check: times over [0, max(t_end, 1)] and a
/// uniform point lattice of at most 32 points per axis.
inline std::vector<double> check_times(const RunConfig& c) {
  std::vector<double> ts;
  const double T = std::max(c.t_end, 1.0);
  for (int k = 0; k <= 64; ++k) ts.push_back(T * k / 64.0);
  return ts;
}

inline std::vector<Point> check_points(const RunConfig& c) {
  const int m = std::min(c.n, 32);
  std::vector<Point> pts;
  const double h = 2.0 * std::numbers::pi / m;
  const int m3 = c.d == 3 ? m : 1;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int e = 0; e < m3; ++e) pts.push_back({a * h, b * h, e * h});
  return pts;
}

struct CheckOutcome {
  HypothesisReport report;
  Json json;
  bool pass = false;
};

inline Json report_json(const HypothesisReport& r, double eta) {
  Json j;
  j["pass"] = r.pass();
  j["first_failure"] = r.first_failure();
  j["H1"] = {{"pass", r.h1_pass},
             {"max_violation", r.symmetry_violation},
             {"index", {r.symmetry_index[0] + 1, r.symmetry_index[1] + 1, r.symmetry_index[2] + 1, r.symmetry_index[3] + 1}},
             {"message", r.h1_message}};
  j["H2"] = {{"pass", r.h2_pass},
             {"lambda_min", r.spectrum.lambda_min},
             {"lambda_max", r.spectrum.lambda_max},
             {"eps_upper", r.spectrum.eps_upper},
             {"eps_lower", r.spectrum.eps_lower},
             {"mu_minus_eps_lower", r.coercivity_margin},
             {"nonnegative_form", r.nonnegative_form}};
  j["H3"] = {{"pass", r.h3_pass}, {"sup_dt", r.sup_dt}, {"sup_grad", r.sup_grad}};
  j["H4"] = {{"pass", r.h4_pass}, {"eta", eta}, {"sup_norm", r.sup_norm}, {"ratio", r.h4_ratio}};
  return j;
}

inline CheckOutcome check_config(const RunConfig& c) {
  CheckOutcome o;
  ViscosityTensor T = build_tensor(c);
  o.report = check_hypotheses(T, c.eta, check_times(c), check_points(c));
  o.pass = o.report.pass();
  o.json = report_json(o.report, c.eta);
  o.json["scenario"] = c.scenario;
  return o;
}

inline std::string describe_failure(const HypothesisReport& r, double eta) {
  const std::string h = r.first_failure();
  std::ostringstream os;
  if (h == "H1") os << "H1 failed: " << r.h1_message;
  else if (h == "H2")
    os << "H2 failed: mu - eps_lower = " << r.coercivity_margin << " (eps_lower = " << r.spectrum.eps_lower << ")";
  else if (h == "H3") os << "H3 failed: derivative bounds not finite";
  else if (h == "H4")
    os << "H4 failed: sup|eps| / (eta min(mu, 2mu+lambda)) = " << r.h4_ratio << " > 1 (eta = " << eta << ")";
  return os.str();
}

inline int cmd_check(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& log) {
  CheckOutcome o = check_config(c);
  detail::write_text(out_dir / "hypotheses.json", o.json.dump(2) + "\n");
  if (o.pass) {
    log << "check: all hypotheses pass (H4 ratio " << o.report.h4_ratio << ")\n";
    return exit_code::ok;
  }
  log << "check: " << describe_failure(o.report, c.eta) << "\n";
  return exit_code::validation;
}

// ---- single run ------------------------------------------------------------

struct SimulationOutcome {
  double delta = 0.0;
  RunResult result;
  std::vector<SampleTerms> terms;
  std::vector<DiagnosticsRecord> records;
  MonitorReport monitor;
  HypothesisReport hypotheses;
  double regularization_cap = 0.0;
};

inline Problem make_problem(const RunConfig& c, double delta) {
  return Problem(SpectralGrid(c.d, c.n), c.law, build_tensor(c), delta, c.dealias, c.rho_floor);
}

inline FluidState initial_state(const RunConfig& c, const Problem& pb, double delta, double* cap = nullptr) {
  InitialData id = make_initial(pb.grid, c.law, c.initial);
  if (!c.regularize) return make_state(id.rho, id.u);
  RegularizedData rd = regularize_initial_data(pb.grid, id.rho, id.u, delta, c.law.M);
  if (cap) *cap = rd.xi;
  return make_state(rd.rho, rd.u);
}

/// Integrates the configured scenario with mollification width `delta` and evaluates
/// the diagnostics at every sample time. States are kept only when requested.
inline SimulationOutcome simulate(const RunConfig& c, double delta, bool keep_states = false) {
  SimulationOutcome o;
  o.delta = delta;
  Problem pb = make_problem(c, delta);
  o.hypotheses = check_hypotheses(pb.tensor, c.eta, check_times(c), check_points(c));
  FluidState s0 = initial_state(c, pb, delta, &o.regularization_cap);
  const std::vector<double> alphas{2.0, c.law.gamma, 2.0 * c.law.gamma};
  const double eps_upper = o.hypotheses.h1_pass ? o.hypotheses.spectrum.eps_upper : 0.0;
  o.result = run(pb, s0, sample_times(c.t_end, c.cadence), c.cfl, eps_upper,
                 [&](const FluidState& s) { o.terms.push_back(sample_terms(pb, s, alphas)); });
  if (!keep_states) {
    o.result.samples.clear();
    o.result.samples.shrink_to_fit();
  }
  MonitorSettings ms;
  ms.c0 = c.c0;
  ms.C_tilde = c.C_tilde;
  ms.eps_lower = o.hypotheses.h1_pass ? o.hypotheses.spectrum.eps_lower : 0.0;
  ms.renorm_alpha_index = 1;
  o.records = build_records(o.terms, ms, &o.monitor);
  return o;
}

inline Json summary_json(const RunConfig& c, const SimulationOutcome& o) {
  Json j;
  j["scenario"] = c.scenario;
  j["delta"] = o.delta;
  j["steps"] = o.result.steps;
  j["samples"] = o.records.size();
  j["completed"] = !o.result.failed;
  if (o.result.failed) {
    j["failure"] = {{"kind", o.result.failure_kind}, {"time", o.result.failure_time}, {"message", o.result.message}};
  }
  j["regularization_cap"] = o.regularization_cap;
  if (!o.terms.empty()) {
    const SampleTerms &a = o.terms.front(), &b = o.terms.back();
    j["mass_initial"] = a.mass;
    j["mass_drift"] = b.mass - a.mass;
    Json mom = Json::array();
    for (std::size_t q = 0; q < a.momentum.size(); ++q) mom.push_back(b.momentum[q] - a.momentum[q]);
    j["momentum_drift"] = mom;
    j["E0"] = a.E;
  }
  if (!o.records.empty()) {
    Json fin;
    const auto vals = record_values(o.records.back());
    for (std::size_t i = 0; i < vals.size(); ++i) fin[csv_columns()[i]] = detail::finite_or_null(vals[i]);
    j["final"] = fin;
    double maxflux = 0.0;
    for (const auto& r : o.records) maxflux = std::max(maxflux, r.resFlux);
    j["max_resFlux"] = maxflux;
  }
  const MonitorReport& m = o.monitor;
  j["monitor"] = {{"c0", m.c0},
                  {"C_tilde", m.C_tilde},
                  {"c0_measured", m.c0_measured},
                  {"c0_satisfied", m.c0_satisfied},
                  {"threshold", m.threshold},
                  {"max_bootstrap", m.max_bootstrap},
                  {"crossed", m.crossed},
                  {"crossing_time", m.crossed ? Json(m.crossing_time) : Json(nullptr)},
                  {"energy_ratio_max", detail::finite_or_null(m.energy_ratio_max)},
                  {"ineq2_ratio_max", m.ineq2_ratio_max},
                  {"ineq3_ratio_max", m.ineq3_ratio_max},
                  {"ineq4_ratio_max", m.ineq4_ratio_max},
                  {"min_meanU_slack", detail::finite_or_null(m.min_meanU_slack)},
                  {"all_finite", m.all_finite}};
  j["hypotheses"] = report_json(o.hypotheses, c.eta);
  return j;
}

inline int cmd_run(const RunConfig& c, const std::filesystem::path& out_dir, bool force, std::ostream& log) {
  CheckOutcome chk = check_config(c);
  if (!chk.pass && !force) {
    log << "run: refusing to start, " << describe_failure(chk.report, c.eta) << " (use --force to override)\n";
    return exit_code::validation;
  }
  SimulationOutcome o = simulate(c, c.delta);
  detail::write_text(out_dir / "timeseries.csv", detail::csv_text(o.records));
  detail::write_text(out_dir / "summary.json", summary_json(c, o).dump(2) + "\n");
  if (o.result.failed) {
    log << "run: " << o.result.failure_kind << " failure at t=" << o.result.failure_time << ": " << o.result.message
        << "\n";
    return exit_code::runtime;
  }
  log << "run: " << o.records.size() << " samples, " << o.result.steps << " steps, wrote " << (out_dir / "timeseries.csv").string()
      << "\n";
  return exit_code::ok;
}

// ---- delta sweep -----------------------------------------------------------

struct SweepOutcome {
  std::vector<double> deltas;
  std::vector<SimulationOutcome> members;
  std::vector<double> differences;  // ||u^{delta_i} - u^{delta_{i+1}}||_{L2((t0,T) x T^d)}
  bool decreasing = false;
  bool complete = true;
};

/// L2((t0,T) x T^d) distance between the velocity histories of two members that share sample times.
inline double velocity_distance(const SpectralGrid& g, const RunResult& a, const RunResult& b, double t0) {
  const std::size_t K = std::min(a.samples.size(), b.samples.size());
  std::vector<double> t, f;
  for (std::size_t k = 0; k < K; ++k) {
    if (a.samples[k].t < t0 - 1e-12) continue;
    VectorField ua = velocity(a.samples[k]), ub = velocity(b.samples[k]);
    double s = 0.0;
    for (std::size_t q = 0; q < ua.size(); ++q)
      for (std::size_t p = 0; p < g.size(); ++p) s += (ua[q][p] - ub[q][p]) * (ua[q][p] - ub[q][p]);
    t.push_back(a.samples[k].t);
    f.push_back(s * g.cell_volume());
  }
  double acc = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) acc += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
  return std::sqrt(acc);
}

inline void validate_sweep(const RunConfig& c) {
  if (c.deltas.size() < 3) throw ConfigError("mollifier.deltas", "a sweep needs at least three values");
  for (std::size_t i = 1; i < c.deltas.size(); ++i)
    if (c.deltas[i] > c.deltas[i - 1]) throw ConfigError("mollifier.deltas", "values must be non-increasing");
  if (c.sweep_t0 > c.t_end) throw ConfigError("solver.sweep_t0", "window start lies after t_end");
}

inline SweepOutcome sweep_delta(const RunConfig& c, int jobs) {
  validate_sweep(c);
  SweepOutcome o;
  o.deltas = c.deltas;
  o.members.resize(c.deltas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c.deltas.size(); i = next++) o.members[i] = simulate(c, c.deltas[i], true);
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(c.deltas.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SpectralGrid g(c.d, c.n);
  for (const auto& m : o.members) o.complete = o.complete && !m.result.failed;
  for (std::size_t i = 0; i + 1 < o.members.size(); ++i)
    o.differences.push_back(velocity_distance(g, o.members[i].result, o.members[i + 1].result, c.sweep_t0));
  o.decreasing = o.differences.size() >= 2;
  for (std::size_t i = 1; i < o.differences.size(); ++i)
    o.decreasing = o.decreasing && o.differences[i] < o.differences[i - 1];
  return o;
}

inline int cmd_sweep_delta(const RunConfig& c, const std::filesystem::path& out_dir, int jobs, bool force,
                           std::ostream& log) {
  CheckOutcome chk = check_config(c);
  if (!chk.pass && !force) {
    log << "sweep-delta: refusing to start, " << describe_failure(chk.report, c.eta) << "\n";
    return exit_code::validation;
  }
  SweepOutcome o = sweep_delta(c, jobs);
  std::string table = "delta_i,delta_next,l2_difference\n";
  for (std::size_t i = 0; i < o.differences.size(); ++i)
    table += detail::fmt_double(o.deltas[i]) + "," + detail::fmt_double(o.deltas[i + 1]) + "," +
             detail::fmt_double(o.differences[i]) + "\n";
  detail::write_text(out_dir / "cauchy.csv", table);
  Json j;
  j["scenario"] = c.scenario;
  j["t0"] = c.sweep_t0;
  j["t_end"] = c.t_end;
  j["deltas"] = o.deltas;
  j["differences"] = o.differences;
  j["decreasing"] = o.decreasing;
  j["complete"] = o.complete;
  Json members = Json::array();
  for (std::size_t i = 0; i < o.members.size(); ++i) {
    const auto dir = out_dir / ("delta_" + std::to_string(i));
    detail::write_text(dir / "timeseries.csv", detail::csv_text(o.members[i].records));
    Json s = summary_json(c, o.members[i]);
    detail::write_text(dir / "summary.json", s.dump(2) + "\n");
    members.push_back({{"delta", o.deltas[i]}, {"completed", !o.members[i].result.failed}, {"dir", dir.filename().string()}});
  }
  j["members"] = members;
  detail::write_text(out_dir / "sweep.json", j.dump(2) + "\n");
  for (std::size_t i = 0; i < o.differences.size(); ++i)
    log << "delta " << o.deltas[i] << " -> " << o.deltas[i + 1] << ": " << o.differences[i] << "\n";
  log << "sweep-delta: difference column " << (o.decreasing ? "decreasing" : "NOT decreasing") << "\n";
  if (!o.complete) {
    log << "sweep-delta: at least one member failed, table is partial\n";
    return exit_code::runtime;
  }
  return exit_code::ok;
}

// ---- report ----------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("", "cannot open CSV '" + p.string() + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(in, line)) throw ConfigError("", "CSV '" + p.string() + "' is empty");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError("line " + std::to_string(lineno), "expected " + std::to_string(t.header.size()) + " cells");
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(detail::parse_double("line " + std::to_string(lineno), c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// One SVG with a small panel per column against the first column.
inline std::string render_svg(const CsvTable& t) {
  const int cols = 4, pw = 300, ph = 180, pad = 40;
  const int panels = static_cast<int>(t.header.size()) - 1;
  const int rows = (panels + cols - 1) / cols;
  const int W = cols * pw, H = std::max(1, rows) * ph;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int c = 1; c <= panels; ++c) {
    const int x0 = ((c - 1) % cols) * pw, y0 = ((c - 1) / cols) * ph;
    double tmin = HUGE_VAL, tmax = -HUGE_VAL, vmin = HUGE_VAL, vmax = -HUGE_VAL;
    for (const auto& r : t.rows) {
      if (!std::isfinite(r[static_cast<std::size_t>(c)])) continue;
      tmin = std::min(tmin, r[0]);
      tmax = std::max(tmax, r[0]);
      vmin = std::min(vmin, r[static_cast<std::size_t>(c)]);
      vmax = std::max(vmax, r[static_cast<std::size_t>(c)]);
    }
    os << "<g transform=\"translate(" << x0 << "," << y0 << ")\">\n";
    os << "<text x=\"" << pw / 2 << "\" y=\"16\" text-anchor=\"middle\">" << t.header[static_cast<std::size_t>(c)] << "</text>\n";
    os << "<rect x=\"" << pad << "\" y=\"24\" width=\"" << pw - pad - 10 << "\" height=\"" << ph - 24 - pad / 2 - 10
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    if (tmin <= tmax) {
      if (vmax == vmin) {
        vmax += 0.5;
        vmin -= 0.5;
      }
      if (tmax == tmin) tmax = tmin + 1.0;
      const double iw = pw - pad - 10, ih = ph - 24 - pad / 2 - 10;
      char lab[64];
      std::snprintf(lab, sizeof lab, "%.3g", vmax);
      os << "<text x=\"2\" y=\"34\">" << lab << "</text>\n";
      std::snprintf(lab, sizeof lab, "%.3g", vmin);
      os << "<text x=\"2\" y=\"" << 24 + ih << "\">" << lab << "</text>\n";
      os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
      for (const auto& r : t.rows) {
        const double v = r[static_cast<std::size_t>(c)];
        if (!std::isfinite(v)) continue;
        const double px = pad + (r[0] - tmin) / (tmax - tmin) * iw;
        const double py = 24 + ih - (v - vmin) / (vmax - vmin) * ih;
        char pt[64];
        std::snprintf(pt, sizeof pt, "%.2f,%.2f ", px, py);
        os << pt;
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline int cmd_report(const std::filesystem::path& csv, const std::filesystem::path& out_dir, std::ostream& log) {
  CsvTable t = read_csv(csv);
  if (t.header.size() < 2) throw ConfigError("", "CSV needs a time column and at least one series");
  const auto path = out_dir / "report.svg";
  detail::write_text(path, render_svg(t));
  log << "report: wrote " << path.string() << " (" << t.header.size() - 1 << " panels, " << t.rows.size() << " rows)\n";
  return exit_code::ok;
}

}  // namespace hoffns
