#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hoffns/errors.hpp"
#include "hoffns/scalar_laws.hpp"
#include "hoffns/solver.hpp"
#include "hoffns/spectral.hpp"
#include "hoffns/tensor4.hpp"

namespace hoffns {

inline double sigma_of(double t) { return std::min(1.0, std::max(0.0, t)); }

// ---- small field algebra ---------------------------------------------------

namespace detail {

inline double frob2(const SpectralGrid& g, const MatrixField& A) {
  double s = 0.0;
  for (const VectorField& row : A)
    for (const Field& c : row)
      for (double v : c) s += v * v;
  return s * g.cell_volume();
}

inline double sum_sq(const SpectralGrid& g, const Field& f) { return inner(g, f, f); }

/// (A B)[i][j] = sum_q A[i][q] B[q][j]
inline MatrixField matmul(const SpectralGrid& g, const MatrixField& A, const MatrixField& B) {
  const auto d = static_cast<std::size_t>(g.dim());
  MatrixField out = g.zero_matrix();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t q = 0; q < d; ++q)
        for (std::size_t p = 0; p < g.size(); ++p) out[i][j][p] += A[i][q][p] * B[q][j][p];
  return out;
}

inline MatrixField transpose(const MatrixField& A) {
  MatrixField out = A;
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < A.size(); ++j) out[i][j] = A[j][i];
  return out;
}

/// Pointwise A : B
inline Field contract2(const SpectralGrid& g, const MatrixField& A, const MatrixField& B) {
  Field out(g.size(), 0.0);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < A.size(); ++j)
      for (std::size_t p = 0; p < g.size(); ++p) out[p] += A[i][j][p] * B[i][j][p];
  return out;
}

inline Field trace(const SpectralGrid& g, const MatrixField& A) {
  Field out(g.size(), 0.0);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t p = 0; p < g.size(); ++p) out[p] += A[i][i][p];
  return out;
}

inline double integral_of_product(const SpectralGrid& g, std::initializer_list<const Field*> fs) {
  double s = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    double v = 1.0;
    for (const Field* f : fs) v *= (*f)[p];
    s += v;
  }
  return s * g.cell_volume();
}

/// int scale(x) core_ijkl A[k][l] B[i][j]
inline double eps_form(const SpectralGrid& g, const ViscosityTensor& T, const Field& scale, const MatrixField& A,
                       const MatrixField& B) {
  MatrixField EA = contract(g, T, A, scale);
  return integral(g, contract2(g, EA, B));
}

/// u . grad f
inline Field advect(const SpectralGrid& g, const VectorField& u, const Field& f) {
  VectorField gf = gradient(g, f);
  Field out(g.size(), 0.0);
  for (std::size_t q = 0; q < u.size(); ++q)
    for (std::size_t p = 0; p < g.size(); ++p) out[p] += u[q][p] * gf[q][p];
  return out;
}

/// omega_delta * (u . grad A) - u . grad(omega_delta * A), entrywise
inline MatrixField transport_commutator(const SpectralGrid& g, const VectorField& u, const MatrixField& A,
                                        double delta) {
  MatrixField out = g.zero_matrix();
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < A.size(); ++j) {
      Field a = hoffns::mollify(g, advect(g, u, A[i][j]), delta);
      Field b = advect(g, u, hoffns::mollify(g, A[i][j], delta));
      for (std::size_t p = 0; p < g.size(); ++p) out[i][j][p] = a[p] - b[p];
    }
  return out;
}

inline MatrixField mollify(const SpectralGrid& g, const MatrixField& A, double delta) {
  MatrixField out;
  for (const VectorField& row : A) out.push_back(hoffns::mollify(g, row, delta));
  return out;
}

}  // namespace detail

// ---- scalar functionals of one state --------------------------------------

/// int H1(rho/M) + rho |u|^2 / 2
inline double energy(const SpectralGrid& g, const PressureLaw& law, const FluidState& s) {
  double acc = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    double m2 = 0.0;
    for (const Field& c : s.m) m2 += c[p] * c[p];
    acc += h1_rel(law, s.rho[p]) + 0.5 * m2 / s.rho[p];
  }
  return acc * g.cell_volume();
}

inline double integral_h_ell(const SpectralGrid& g, const PressureLaw& law, const Field& rho, int ell) {
  double acc = 0.0;
  for (double r : rho) acc += h_ell(law, r, ell);
  return acc * g.cell_volume();
}

struct FluxResult {
  Field F;               // (2mu+lambda) div u - (P - P(M))
  double residual = 0.0;
};

/// Effective flux and the relative L2 defect of
///   F - mean F = inv_lap_div(rho u_dot) - inv_lap_div(omega_delta * div(eps : grad u_delta)).
inline FluxResult effective_flux(const Problem& pb, const FluidState& s, const StateFields& f) {
  const SpectralGrid& g = pb.grid;
  const double nu = 2.0 * pb.tensor.mu + pb.tensor.lambda;
  const double pm = pressure(pb.law, pb.law.M);
  FluxResult r;
  r.F.resize(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) r.F[p] = nu * f.div_u[p] - (f.P[p] - pm);
  VectorField rud = f.udot;
  for (Field& c : rud)
    for (std::size_t p = 0; p < g.size(); ++p) c[p] *= s.rho[p];
  Field rhs = inv_lap_div(g, rud);
  if (!pb.tensor.is_zero()) {
    Field a = inv_lap_div(g, f.aniso);
    for (std::size_t p = 0; p < g.size(); ++p) rhs[p] -= a[p];
  }
  const double Fm = mean(g, r.F);
  Field diff(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) diff[p] = r.F[p] - Fm - rhs[p];
  r.residual = lp_norm(g, diff, 2.0) / (1.0 + lp_norm(g, r.F, 2.0));
  return r;
}

inline FluxResult effective_flux(const Problem& pb, const FluidState& s) {
  return effective_flux(pb, s, evaluate_fields(pb, s));
}

// ---- per-sample terms ------------------------------------------------------

/// Instantaneous integrals at one sample time. Time integrals are formed later from
/// a sequence of these.
struct SampleTerms {
  double t = 0.0;
  double sigma = 0.0;

  double E = 0.0;
  double grad2 = 0.0;       // ||grad u||^2
  double div2 = 0.0;        // ||div u||^2
  double epsYY = 0.0;       // int eps grad u_delta grad u_delta
  double P_div = 0.0;       // int P div u
  double rho_udot2 = 0.0;   // int rho |u_dot|^2
  double gradudot2 = 0.0;   // ||grad u_dot||^2
  double divudot2 = 0.0;    // ||div u_dot||^2
  double epsZZ = 0.0;       // int eps grad u_dot_delta grad u_dot_delta
  double R1 = 0.0;          // right side of the first Hoff balance
  double R2 = 0.0;          // right side of the second Hoff balance
  double intH2 = 0.0;
  double intH3 = 0.0;
  double P3 = 0.0;          // ||P - P(M)||_3^3
  double P4 = 0.0;          // ||P - P(M)||_4^4
  double gradU3 = 0.0;      // ||grad u||_3^3
  double gradU4 = 0.0;      // ||grad u||_4^4
  double normF3 = 0.0;
  double normF4 = 0.0;
  double res_flux = 0.0;
  double mass = 0.0;
  std::vector<double> momentum;
  double rho_l2 = 0.0;
  double grad_l2 = 0.0;
  double u2 = 0.0;          // ||u||^2
  std::vector<double> mean_u;
  double rho_min = 0.0;
  double rho_max = 0.0;
  std::vector<double> alphas;
  std::vector<double> rho_alpha;      // int rho^alpha
  std::vector<double> rho_alpha_div;  // int rho^alpha div u

  double L1() const { return 0.5 * grad2 * mu_ + 0.5 * (mu_ + lambda_) * div2 + 0.5 * epsYY - P_div; }
  double X() const { return 0.5 * rho_udot2; }
  double D2() const { return mu_ * gradudot2 + (mu_ + lambda_) * divudot2 + epsZZ; }

  double mu_ = 1.0;
  double lambda_ = 0.0;
};

inline SampleTerms sample_terms(const Problem& pb, const FluidState& s, const std::vector<double>& alphas = {}) {
  const SpectralGrid& g = pb.grid;
  const ViscosityTensor& T = pb.tensor;
  const double mu = T.mu, lam = T.lambda, gam = pb.law.gamma;
  const auto d = static_cast<std::size_t>(g.dim());
  const StateFields f = evaluate_fields(pb, s);
  SampleTerms r;
  r.t = s.t;
  r.sigma = sigma_of(s.t);
  r.mu_ = mu;
  r.lambda_ = lam;

  const Field scale = T.scale_field(g, s.t);
  const bool aniso = !T.is_zero();

  r.E = energy(g, pb.law, s);
  r.grad2 = detail::frob2(g, f.G);
  r.div2 = detail::sum_sq(g, f.div_u);
  r.epsYY = aniso ? detail::eps_form(g, T, scale, f.Y, f.Y) : 0.0;
  r.P_div = inner(g, f.P, f.div_u);
  {
    double acc = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) v += f.udot[i][p] * f.udot[i][p];
      acc += s.rho[p] * v;
    }
    r.rho_udot2 = acc * g.cell_volume();
  }

  const MatrixField H = jacobian(g, f.udot);  // H[i][k] = d_k u_dot^i
  const Field div_udot = detail::trace(g, H);
  r.gradudot2 = detail::frob2(g, H);
  r.divudot2 = detail::sum_sq(g, div_udot);
  const MatrixField Z = aniso ? jacobian(g, mollify(g, f.udot, pb.delta)) : MatrixField{};
  r.epsZZ = aniso ? detail::eps_form(g, T, scale, Z, Z) : 0.0;

  const MatrixField GG = detail::matmul(g, f.G, f.G);
  const Field trG2 = detail::trace(g, GG);
  const Field G2 = detail::contract2(g, f.G, f.G);

  // ---- first balance
  {
    const MatrixField GGt = detail::matmul(g, f.G, detail::transpose(f.G));
    double R = 0.0;
    // -mu int G_ik G_lk G_il = -mu int (G G^T) : G
    R += -mu * integral(g, detail::contract2(g, GGt, f.G));
    R += 0.5 * mu * detail::integral_of_product(g, {&G2, &f.div_u});
    R += -(mu + lam) * detail::integral_of_product(g, {&f.div_u, &trG2});
    R += 0.5 * (mu + lam) * detail::integral_of_product(g, {&f.div_u, &f.div_u, &f.div_u});
    R += (gam - 1.0) * detail::integral_of_product(g, {&f.P, &f.div_u, &f.div_u});
    R += detail::integral_of_product(g, {&f.P, &trG2});
    if (aniso) {
      TensorDerivatives td = tensor_derivatives(g, T, s.t);
      Field w = td.dt.scale;
      for (std::size_t p = 0; p < g.size(); ++p) {
        double ug = 0.0;
        for (std::size_t q = 0; q < d; ++q) ug += f.u[q][p] * td.grad[q].scale[p];
        w[p] += ug + scale[p] * f.div_u[p];
      }
      const MatrixField N = detail::mollify(g, GG, pb.delta);
      const MatrixField C = detail::transport_commutator(g, f.u, f.G, pb.delta);
      R += 0.5 * detail::eps_form(g, T, w, f.Y, f.Y);
      R -= detail::eps_form(g, T, scale, f.Y, N);
      R -= detail::eps_form(g, T, scale, f.Y, C);

      // ---- anisotropic part of the second balance
      const MatrixField HG = detail::matmul(g, H, f.G);
      const MatrixField C2 = detail::transport_commutator(g, f.u, H, pb.delta);
      double R2a = 0.0;
      R2a -= detail::eps_form(g, T, w, f.Y, Z);
      R2a += detail::eps_form(g, T, scale, N, Z);
      R2a += detail::eps_form(g, T, scale, f.Y, detail::mollify(g, HG, pb.delta));
      R2a += detail::eps_form(g, T, scale, C, Z);
      R2a += detail::eps_form(g, T, scale, f.Y, C2);
      r.R2 = R2a;
    }
    r.R1 = R;
  }

  // ---- isotropic and pressure parts of the second balance
  {
    const MatrixField GGt = detail::matmul(g, f.G, detail::transpose(f.G));
    const MatrixField HG = detail::matmul(g, H, f.G);
    const Field trHG = detail::trace(g, HG);
    const Field GH = detail::contract2(g, f.G, H);
    double R = 0.0;
    R += mu * integral(g, detail::contract2(g, GG, H));
    R += mu * integral(g, detail::contract2(g, GGt, H));
    R -= mu * detail::integral_of_product(g, {&f.div_u, &GH});
    R += (mu + lam) * detail::integral_of_product(g, {&trG2, &div_udot});
    R += (mu + lam) * detail::integral_of_product(g, {&f.div_u, &trHG});
    R -= (mu + lam) * detail::integral_of_product(g, {&f.div_u, &f.div_u, &div_udot});
    R -= detail::integral_of_product(g, {&f.P, &trHG});
    R -= (gam - 1.0) * detail::integral_of_product(g, {&f.P, &f.div_u, &div_udot});
    r.R2 += R;
  }

  // ---- density functionals and norms
  r.intH2 = integral_h_ell(g, pb.law, s.rho, 2);
  r.intH3 = integral_h_ell(g, pb.law, s.rho, 3);
  const double pm = pressure(pb.law, pb.law.M);
  Field dP(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) dP[p] = f.P[p] - pm;
  r.P3 = std::pow(lp_norm(g, dP, 3.0), 3.0);
  r.P4 = std::pow(lp_norm(g, dP, 4.0), 4.0);
  r.gradU3 = std::pow(lp_norm(g, f.G, 3.0), 3.0);
  r.gradU4 = std::pow(lp_norm(g, f.G, 4.0), 4.0);

  FluxResult fx = effective_flux(pb, s, f);
  r.normF3 = lp_norm(g, fx.F, 3.0);
  r.normF4 = lp_norm(g, fx.F, 4.0);
  r.res_flux = fx.residual;

  r.mass = integral(g, s.rho);
  for (const Field& c : s.m) r.momentum.push_back(integral(g, c));
  r.rho_l2 = lp_norm(g, s.rho, 2.0);
  r.grad_l2 = std::sqrt(r.grad2);
  for (const Field& c : f.u) {
    r.u2 += detail::sum_sq(g, c);
    r.mean_u.push_back(mean(g, c));
  }
  r.rho_min = *std::min_element(s.rho.begin(), s.rho.end());
  r.rho_max = *std::max_element(s.rho.begin(), s.rho.end());

  r.alphas = alphas;
  for (double a : alphas) {
    Field ra(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) ra[p] = std::pow(s.rho[p], a);
    r.rho_alpha.push_back(integral(g, ra));
    r.rho_alpha_div.push_back(inner(g, ra, f.div_u));
  }
  return r;
}

// ---- time quadrature -------------------------------------------------------

/// Composite trapezoid of f over samples 0, stride, 2*stride, ..., upto.
template <class F>
double trapezoid(const std::vector<SampleTerms>& ts, std::size_t stride, std::size_t upto, F&& f) {
  if (ts.empty()) throw CadenceError("no samples");
  if (stride == 0 || upto >= ts.size() || upto % stride != 0) {
    throw CadenceError("sample index " + std::to_string(upto) + " is not reachable with stride " +
                       std::to_string(stride));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k + stride <= upto; k += stride) {
    const double dt = ts[k + stride].t - ts[k].t;
    acc += 0.5 * dt * (f(ts[k]) + f(ts[k + stride]));
  }
  return acc;
}

/// Trapezoid of f restricted to [0, min(1, t_upto)]; t = 1 must be a sample node.
template <class F>
double trapezoid_until_one(const std::vector<SampleTerms>& ts, std::size_t stride, std::size_t upto, F&& f) {
  std::size_t last = 0;
  for (std::size_t k = 0; k <= upto; k += stride)
    if (ts[k].t <= 1.0 + 1e-12) last = k;
  return trapezoid(ts, stride, last, f);
}

// ---- Hoff functionals ------------------------------------------------------

inline double hoff_a1(const std::vector<SampleTerms>& ts, std::size_t upto, std::size_t stride = 1) {
  const SampleTerms& s = ts.at(upto);
  const double mu = s.mu_, lam = s.lambda_;
  return 0.5 * mu * s.grad2 + (mu + lam) * s.div2 + s.epsYY +
         trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.rho_udot2; });
}

inline double hoff_a2(const std::vector<SampleTerms>& ts, std::size_t upto, std::size_t stride = 1) {
  const SampleTerms& s = ts.at(upto);
  return s.sigma * s.X() + trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.sigma * q.D2(); });
}

inline double b_functional(const std::vector<SampleTerms>& ts, std::size_t upto, std::size_t stride = 1) {
  const SampleTerms& s = ts.at(upto);
  const double nu = 2.0 * s.mu_ + s.lambda_;
  const double p3 = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.P3; });
  const double p4 = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.sigma * q.P4; });
  return (1.0 + 2.0 * nu) * s.intH2 + s.sigma * s.intH3 + (p3 + p4) / (2.0 * nu);
}

// ---- identity residuals ----------------------------------------------------

/// |L1(t) + int rho|u_dot|^2 - L1(0) - int R1| / (1 + |L1(t) + int rho|u_dot|^2|)
inline double a1_identity_residual(const std::vector<SampleTerms>& ts, std::size_t upto, std::size_t stride = 1) {
  const double diss = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.rho_udot2; });
  const double src = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.R1; });
  const double lhs = ts[upto].L1() + diss;
  return std::abs(lhs - ts[0].L1() - src) / (1.0 + std::abs(lhs));
}

/// sigma X(t) + int sigma D = int_0^{min(1,t)} X + int sigma R2, X = int rho |u_dot|^2 / 2
inline double a2_identity_residual(const std::vector<SampleTerms>& ts, std::size_t upto, std::size_t stride = 1) {
  const double diss = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.sigma * q.D2(); });
  const double src = trapezoid(ts, stride, upto, [](const SampleTerms& q) { return q.sigma * q.R2; });
  const double offset = trapezoid_until_one(ts, stride, upto, [](const SampleTerms& q) { return q.X(); });
  const double lhs = ts[upto].sigma * ts[upto].X() + diss;
  return std::abs(lhs - offset - src) / (1.0 + std::abs(lhs));
}

/// Space-integrated renormalized equation for b(rho) = rho^alpha:
/// int rho^alpha(t) - int rho^alpha(0) + (alpha - 1) int_0^t int rho^alpha div u.
inline double renorm_residual(const std::vector<SampleTerms>& ts, std::size_t alpha_index, std::size_t upto,
                              std::size_t stride = 1) {
  const double a = ts.at(0).alphas.at(alpha_index);
  const double src = trapezoid(ts, stride, upto, [&](const SampleTerms& q) { return q.rho_alpha_div[alpha_index]; });
  const double now = ts[upto].rho_alpha[alpha_index];
  return std::abs(now - ts[0].rho_alpha[alpha_index] + (a - 1.0) * src) / (1.0 + std::abs(now));
}

// ---- records and monitor ---------------------------------------------------

struct DiagnosticsRecord {
  double t = 0.0, sigma = 0.0, E = 0.0, A1 = 0.0, A2 = 0.0, B = 0.0;
  double normF3 = 0.0, normF4 = 0.0, intP3 = 0.0, intP4 = 0.0, intGradU3 = 0.0, intGradU4_sigma = 0.0;
  double resA1 = 0.0, resA2 = 0.0, resFlux = 0.0, resRenorm = 0.0;
  double meanU_slack = 0.0, bootstrap_ratio = 0.0, rho_min = 0.0, rho_max = 0.0;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "t",     "sigma", "E",     "A1",     "A2",     "B",        "normF3",    "normF4",      "intP3",           "intP4",
      "intGradU3", "intGradU4_sigma", "resA1", "resA2", "resFlux", "resRenorm", "meanU_slack", "bootstrap_ratio",
      "rho_min", "rho_max"};
  return cols;
}

inline std::vector<double> record_values(const DiagnosticsRecord& r) {
  return {r.t,      r.sigma,  r.E,     r.A1,      r.A2,        r.B,
          r.normF3, r.normF4, r.intP3, r.intP4,   r.intGradU3, r.intGradU4_sigma,
          r.resA1,  r.resA2,  r.resFlux, r.resRenorm, r.meanU_slack, r.bootstrap_ratio,
          r.rho_min, r.rho_max};
}

struct MonitorSettings {
  double c0 = 1.0;
  double C_tilde = 10.0;
  double eps_lower = 0.0;
  std::size_t renorm_alpha_index = 0;
};

struct MonitorReport {
  double c0 = 0.0;
  double C_tilde = 0.0;
  double c0_measured = 0.0;  // E0 + int H2(rho0/M) + ||u0||_{H^1}^2
  bool c0_satisfied = false;
  double threshold = 0.0;    // 2 C_tilde c0
  double max_bootstrap = 0.0;
  bool crossed = false;
  double crossing_time = -1.0;
  // max over samples of each theorem left side (the first divided by E0, the others by c0)
  double energy_ratio_max = 0.0;
  double ineq2_ratio_max = 0.0;
  double ineq3_ratio_max = 0.0;
  double ineq4_ratio_max = 0.0;
  double min_meanU_slack = std::numeric_limits<double>::infinity();
  bool all_finite = true;
};

/// Builds one record per sample and the monitor summary. The first theorem line is
/// evaluated with the dissipation integrated in time.
inline std::vector<DiagnosticsRecord> build_records(const std::vector<SampleTerms>& ts, const MonitorSettings& ms,
                                                    MonitorReport* monitor = nullptr) {
  std::vector<DiagnosticsRecord> out;
  if (ts.empty()) return out;
  MonitorReport mr;
  mr.c0 = ms.c0;
  mr.C_tilde = ms.C_tilde;
  mr.threshold = 2.0 * ms.C_tilde * ms.c0;
  const SampleTerms& s0 = ts.front();
  const double E0 = s0.E;
  mr.c0_measured = E0 + s0.intH2 + s0.u2 + s0.grad2;
  mr.c0_satisfied = mr.c0_measured <= ms.c0;
  const double mu = s0.mu_, lam = s0.lambda_;
  const double mass_tot = s0.mass;

  double running = 0.0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const SampleTerms& s = ts[j];
    DiagnosticsRecord r;
    r.t = s.t;
    r.sigma = s.sigma;
    r.E = s.E;
    r.A1 = hoff_a1(ts, j);
    r.A2 = hoff_a2(ts, j);
    r.B = b_functional(ts, j);
    r.normF3 = s.normF3;
    r.normF4 = s.normF4;
    r.intP3 = trapezoid(ts, 1, j, [](const SampleTerms& q) { return q.P3; });
    r.intP4 = trapezoid(ts, 1, j, [](const SampleTerms& q) { return q.sigma * q.P4; });
    r.intGradU3 = trapezoid(ts, 1, j, [](const SampleTerms& q) { return q.gradU3; });
    r.intGradU4_sigma = trapezoid(ts, 1, j, [](const SampleTerms& q) { return q.sigma * q.gradU4; });
    r.resA1 = a1_identity_residual(ts, j);
    r.resA2 = a2_identity_residual(ts, j);
    r.resFlux = s.res_flux;
    r.resRenorm = s.alphas.empty() ? 0.0 : renorm_residual(ts, ms.renorm_alpha_index, j);
    double slack = std::numeric_limits<double>::infinity();
    for (double ubar : s.mean_u)
      slack = std::min(slack, std::sqrt(2.0 * mass_tot * E0) + s.rho_l2 * s.grad_l2 - mass_tot * std::abs(ubar));
    r.meanU_slack = slack;
    running = std::max(running, 0.5 * r.A1 + r.A2 + r.B);
    r.bootstrap_ratio = running / mr.threshold;
    r.rho_min = s.rho_min;
    r.rho_max = s.rho_max;

    const double ineq1 = s.E + trapezoid(ts, 1, j, [&](const SampleTerms& q) {
                           return (mu - ms.eps_lower) * q.grad2 + (mu + lam) * q.div2;
                         });
    const double ineq2 = 0.5 * (mu * s.grad2 + (mu + lam) * s.div2) +
                         trapezoid(ts, 1, j, [](const SampleTerms& q) { return q.rho_udot2; });
    const double ineq3 = s.sigma * s.X() + trapezoid(ts, 1, j, [&](const SampleTerms& q) {
                           return q.sigma * (mu * q.gradudot2 + (mu + lam) * q.divudot2);
                         });
    const double ineq4 = s.intH2 + s.sigma * s.intH3 + r.intP3 + r.intP4;
    mr.energy_ratio_max = std::max(mr.energy_ratio_max, E0 > 0 ? ineq1 / E0 : (ineq1 > 0 ? HUGE_VAL : 0.0));
    mr.ineq2_ratio_max = std::max(mr.ineq2_ratio_max, ineq2 / ms.c0);
    mr.ineq3_ratio_max = std::max(mr.ineq3_ratio_max, ineq3 / ms.c0);
    mr.ineq4_ratio_max = std::max(mr.ineq4_ratio_max, ineq4 / ms.c0);
    mr.min_meanU_slack = std::min(mr.min_meanU_slack, r.meanU_slack);
    if (!mr.crossed && r.bootstrap_ratio > 1.0) {
      mr.crossed = true;
      mr.crossing_time = s.t;
    }
    for (double v : record_values(r))
      if (!std::isfinite(v)) mr.all_finite = false;
    out.push_back(r);
  }
  mr.max_bootstrap = running;
  if (monitor) *monitor = mr;
  return out;
}

}  // namespace hoffns
