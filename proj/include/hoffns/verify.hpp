#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "hoffns/commands.hpp"

namespace hoffns {

/// Deliberate defects used to show that the suite can fail.
enum class Mutation { None, H1SignFlip, MollifierClamp };

inline Mutation parse_mutation(const std::string& s) {
  if (s.empty() || s == "none") return Mutation::None;
  if (s == "h1_sign_flip") return Mutation::H1SignFlip;
  if (s == "mollifier_clamp") return Mutation::MollifierClamp;
  throw ConfigError("--mutate", "unknown mutation '" + s + "'");
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace verify_detail {

using Big = boost::multiprecision::cpp_bin_float_50;

inline std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Relative entropy, optionally with the sign of the linear term flipped.
inline Big h1_variant(const PressureLaw& law, const Big& rho, Mutation mut) {
  Big v = h1_rel<Big>(law, rho);
  if (mut == Mutation::H1SignFlip) {
    const Big slope = Big(law.a * law.gamma / (law.gamma - 1.0)) * detail::rpow(Big(law.M), law.gamma - 1.0);
    v += Big(2) * slope * (rho - Big(law.M));
  }
  return v;
}

inline Big gap_variant(const PressureLaw& law, const Big& rho, Mutation mut) {
  const Big g(law.gamma);
  const Big alpha = Big(2) * g * Big(law.a) * detail::rpow(Big(law.M), law.gamma);
  const Big q = pressure<Big>(law, rho) - pressure<Big>(law, Big(law.M));
  return alpha * h1_variant(law, rho, mut) + (Big(2) * g - Big(1)) * h_ell<Big>(law, rho, 2) - q * q;
}

inline std::vector<PressureLaw> laws() {
  std::vector<PressureLaw> out;
  for (double g : {1.4, 5.0 / 3.0, 2.0, 3.0})
    for (double M : {0.5, 1.0, 2.0}) out.push_back(PressureLaw{1.0, g, M});
  return out;
}

inline std::vector<double> log_rhos(int n, double lo, double hi) {
  std::vector<double> r;
  for (int i = 0; i < n; ++i) r.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return r;
}

inline Field apply_symbol(const SpectralGrid& g, const Field& f, const std::function<double(double)>& sym) {
  Spectrum s = g.forward(f);
  for (std::size_t m = 0; m < g.modes(); ++m) s[m] *= sym(g.k_squared_full(m));
  return g.inverse(s);
}

}  // namespace verify_detail

/// The desk-scale property suite.
inline std::vector<CheckResult> run_verify_suite(Mutation mut) {
  using namespace verify_detail;
  std::vector<CheckResult> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };

  // ---- scalar laws
  {
    double worst = 0.0;
    for (const auto& law : laws())
      for (double r : log_rhos(17, 1e-3, 1e3))
        for (int ell : {2, 3}) {
          double a = h_ell(law, r, ell);
          double b = h_ell_quad(law, r, ell);
          if (std::abs(a) > 1e-12) worst = std::max(worst, std::abs(a - b) / std::abs(b));
        }
    add("scalar.h_ell_matches_quadrature", worst <= 1e-8, "max rel err " + num(worst));
  }
  {
    double minimum = HUGE_VAL, above = 0.0;
    for (const auto& law : laws())
      for (double r : log_rhos(41, 1e-3, 1e3)) {
        const double gap = static_cast<double>(gap_variant(law, Big(r), mut));
        minimum = std::min(minimum, gap);
        if (r >= law.M) above = std::max(above, std::abs(gap));
      }
    add("scalar.ineg2_nonnegative", minimum >= -1e-12, "min gap " + num(minimum));
    add("scalar.ineg2_equality_above_M", above <= 1e-10, "max |gap| for rho >= M " + num(above));
    PressureLaw law{1.0, 2.0, 1.0};
    const double g2 = static_cast<double>(gap_variant(law, Big(2), mut));
    add("scalar.ineg2_exact_case", std::abs(g2) <= 1e-10, "gap at (2,1,2) " + num(g2));
  }
  {
    double worst = 0.0;
    for (const auto& law : laws())
      for (double r : log_rhos(17, 1e-2, 1e2)) {
        if (std::abs(r - law.M) < 0.2 * law.M) continue;  // the grouped sum cancels badly near M
        const double a = h3_expansion(law, r), b = h_ell_quad(law, r, 3);
        worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
      }
    add("scalar.h3_expansion", worst <= 1e-8, "max rel err " + num(worst));
  }

  // ---- tensor4
  {
    ViscosityTensor T = random_symmetric_tensor(2, 1.0, 0.0, 11, 0.05);
    CoercivitySpectrum sp = core_spectrum(T);
    Eigen::MatrixXd A = core_matrix(T);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N01;
    bool ok = true;
    for (int it = 0; it < 10000; ++it) {
      Eigen::VectorXd a(4);
      for (int q = 0; q < 4; ++q) a(q) = N01(rng);
      const double form = a.dot(A * a), n2 = a.squaredNorm();
      ok = ok && form <= sp.lambda_max * n2 + 1e-12 && form >= sp.lambda_min * n2 - 1e-12;
    }
    add("tensor.quadratic_sandwich", ok, "lambda in [" + num(sp.lambda_min) + ", " + num(sp.lambda_max) + "]");
  }

  // ---- spectral
  SpectralGrid g(2, 32);
  std::mt19937_64 rng(2024);
  {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      Field f = random_bandlimited_field(g, rng, 5);
      Field r = g.inverse(g.forward(f));
      for (std::size_t p = 0; p < g.size(); ++p) worst = std::max(worst, std::abs(r[p] - f[p]));
    }
    add("spectral.round_trip", worst <= 1e-13, "max err " + num(worst));
  }
  {
    Field f = random_bandlimited_field(g, rng, 5), h = random_bandlimited_field(g, rng, 5);
    const double a = inner(g, f, h), b = spectral_inner(g, g.forward(f), g.forward(h));
    add("spectral.parseval", std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)), "diff " + num(a - b));
  }
  {
    VectorField u{random_bandlimited_field(g, rng, 6), random_bandlimited_field(g, rng, 6)};
    CzNorms cz = cz_split_norms(g, u, 2.0);
    const double lhs = cz.grad * cz.grad, rhs = cz.div * cz.div + cz.curl * cz.curl;
    add("spectral.plancherel", std::abs(lhs - rhs) <= 1e-11 * lhs, "rel diff " + num(std::abs(lhs - rhs) / lhs));
  }
  {
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
      Field f = random_bandlimited_field(g, rng, 6);
      const double m = mean(g, f);
      Field c = f;
      for (double& v : c) v -= m;
      ok = ok && lp_norm(g, c, 2.0) <= lp_norm(g, gradient(g, f), 2.0) * (1.0 + 1e-12);
    }
    add("spectral.poincare", ok, "20 random fields");
  }
  {
    Field s = g.sample([](const double* x) { return std::sin(x[0]); });
    Field r = inv_lap_div(g, gradient(g, s));
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) e = std::max(e, std::abs(r[p] - s[p]));
    add("spectral.inv_lap_div_eigenfunction", e <= 1e-12, "max err " + num(e));
  }
  {
    Field f = random_bandlimited_field(g, rng, 6), h = random_bandlimited_field(g, rng, 6);
    const double a = inner(g, mollify(g, f, 0.3), h), b = inner(g, f, mollify(g, h, 0.3));
    add("spectral.mollifier_self_adjoint", std::abs(a - b) <= 1e-12, "diff " + num(a - b));
  }
  {
    Field s3 = g.sample([](const double* x) { return std::sin(3.0 * x[0]); });
    auto err = [&](double delta) {
      Field m = apply_symbol(g, s3, [&](double k2) {
        return mut == Mutation::MollifierClamp ? 1.0 : mollifier_symbol(delta, k2);
      });
      for (std::size_t p = 0; p < g.size(); ++p) m[p] -= s3[p];
      return lp_norm(g, m, 2.0);
    };
    const double e1 = err(0.1), e2 = err(0.05);
    const double ratio = e2 > 0.0 ? e1 / e2 : 0.0;
    add("spectral.mollifier_convergence", ratio >= 3.5 && ratio <= 4.5, "error ratio per halving " + num(ratio));
  }
  {
    Field f = random_bandlimited_field(g, rng, 12);
    Field a = dealias(g, f), b = dealias(g, a);
    double e = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) e = std::max(e, std::abs(a[p] - b[p]));
    add("spectral.dealias_idempotent", e <= 1e-14, "max err " + num(e));
  }
  {
    SpectralGrid g64(2, 64);
    Field b = g64.sample([](const double* x) { return std::sin(x[0]); });
    Field a = g64.sample([](const double* x) { return std::cos(2.0 * x[1]); });
    double prev = HUGE_VAL, worst_ratio = 0.0;
    bool ok = true;
    for (double delta : {0.4, 0.2, 0.1, 0.05}) {
      const double r = lp_norm(g64, commutator_r1(g64, b, a, delta, 1), 2.0);
      if (prev < HUGE_VAL) worst_ratio = std::max(worst_ratio, r / prev);
      ok = ok && r < prev;
      prev = r;
    }
    add("spectral.commutator_decay", ok && worst_ratio <= 0.75, "worst ratio " + num(worst_ratio));
  }

  // ---- solver and diagnostics on a short resolved run
  {
    RunConfig c;
    c.scenario = "verify";
    c.n = 32;
    c.tensor.preset = "random_symmetric";
    c.tensor.seed = 3;
    c.tensor.amp = 0.05;
    c.initial.kind = "random_bandlimited";
    c.initial.seed = 9;
    c.initial.kmax = 2;
    c.initial.eps = 0.02;
    c.t_end = 0.2;
    c.cadence = 0.0125;
    c.delta = 0.1;
    SimulationOutcome o = simulate(c, c.delta);
    add("solver.completes", !o.result.failed, o.result.failed ? o.result.message : std::to_string(o.result.steps) + " steps");
    if (!o.result.failed && o.terms.size() == 17) {
      const SampleTerms &a = o.terms.front(), &z = o.terms.back();
      const double mass = std::abs(z.mass - a.mass) / a.mass;
      add("solver.mass_conservation", mass <= 1e-12, "relative drift " + num(mass));
      double mom = 0.0;
      for (std::size_t q = 0; q < a.momentum.size(); ++q) mom = std::max(mom, std::abs(z.momentum[q] - a.momentum[q]));
      add("solver.momentum_conservation", mom <= 1e-9, "drift " + num(mom));
      add("diagnostics.energy_inequality", o.monitor.energy_ratio_max <= 1.0 + 1e-4,
          "max ratio " + num(o.monitor.energy_ratio_max));
      double flux = 0.0;
      for (const auto& r : o.records) flux = std::max(flux, r.resFlux);
      add("diagnostics.flux_identity", flux <= 1e-8, "max residual " + num(flux));
      const std::size_t K = o.terms.size() - 1;
      auto ratios = [&](auto fn) {
        const double r4 = fn(4), r2 = fn(2), r1 = fn(1);
        return std::min(r4 / r2, r2 / r1);
      };
      const double q1 = ratios([&](std::size_t s) { return a1_identity_residual(o.terms, K, s); });
      const double q2 = ratios([&](std::size_t s) { return a2_identity_residual(o.terms, K, s); });
      const double qr = ratios([&](std::size_t s) { return renorm_residual(o.terms, 1, K, s); });
      add("diagnostics.a1_identity_second_order", q1 >= 3.5, "min ratio " + num(q1));
      add("diagnostics.a2_identity_second_order", q2 >= 3.5, "min ratio " + num(q2));
      add("diagnostics.renorm_second_order", qr >= 3.5, "min ratio " + num(qr));
    }
  }
  return out;
}

inline int cmd_verify(const std::filesystem::path& out_dir, Mutation mut, std::ostream& log) {
  std::vector<CheckResult> results = run_verify_suite(mut);
  Json j = Json::array();
  bool all = true;
  for (const auto& r : results) {
    log << (r.pass ? "PASS " : "FAIL ") << r.name << " : " << r.detail << "\n";
    j.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
  }
  detail::write_text(out_dir / "verify.json", j.dump(2) + "\n");
  log << "verify: " << (all ? "all checks passed" : "FAILED") << "\n";
  return all ? exit_code::ok : exit_code::acceptance;
}

}  // namespace hoffns
