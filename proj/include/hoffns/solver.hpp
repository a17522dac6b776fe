#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hoffns/errors.hpp"
#include "hoffns/scalar_laws.hpp"
#include "hoffns/spectral.hpp"
#include "hoffns/tensor4.hpp"

namespace hoffns {

struct FluidState {
  Field rho;
  VectorField m;
  double t = 0.0;
};

struct SolverConfig {
  int d = 2;
  int n = 64;
  double delta = 0.1;
  double cfl = 0.4;
  double t_end = 1.0;
  double rho_floor = 1e-6;
  bool dealias = true;
  double cadence = 0.05;

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("cfl must lie in (0, 1]");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(t_end >= 0.0)) throw DomainError("t_end must be nonnegative");
    if (!(cadence > 0.0)) throw DomainError("cadence must be positive");
    if (!(rho_floor >= 0.0)) throw DomainError("rho_floor must be nonnegative");
  }
};

/// Everything the right-hand side depends on besides the state.
struct Problem {
  SpectralGrid grid;
  PressureLaw law;
  ViscosityTensor tensor;
  double delta = 0.1;
  bool dealias = true;
  double rho_floor = 1e-6;

  Problem(SpectralGrid g, PressureLaw l, ViscosityTensor T, double dlt, bool dl = true, double floor = 1e-6)
      : grid(std::move(g)), law(l), tensor(std::move(T)), delta(dlt), dealias(dl), rho_floor(floor) {
    if (tensor.d != grid.dim()) throw ShapeError("tensor dimension does not match grid");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
  }
};

inline void check_state(const Problem& pb, const FluidState& s) {
  double lo = std::numeric_limits<double>::infinity();
  for (double r : s.rho) {
    if (!std::isfinite(r)) throw BlowUpError(s.t, "non-finite density at t=" + std::to_string(s.t));
    lo = std::min(lo, r);
  }
  for (const Field& c : s.m)
    for (double v : c)
      if (!std::isfinite(v)) throw BlowUpError(s.t, "non-finite momentum at t=" + std::to_string(s.t));
  if (!(lo > pb.rho_floor)) {
    throw PositivityError(s.t, "density " + std::to_string(lo) + " fell below floor at t=" + std::to_string(s.t));
  }
}

inline VectorField velocity(const FluidState& s) {
  VectorField u = s.m;
  for (Field& c : u)
    for (std::size_t p = 0; p < c.size(); ++p) c[p] /= s.rho[p];
  return u;
}

namespace detail {

inline void add_spectral_divergence(const SpectralGrid& g, Spectrum& acc, const Field& f, int axis, double coef,
                                    bool mask, double moll_delta = 0.0) {
  Spectrum s = g.forward(f);
  for (std::size_t m = 0; m < g.modes(); ++m) {
    if (mask && !g.in_dealias_band(m)) continue;
    double c = coef * g.derivative_wavenumber(m, axis);
    if (moll_delta > 0.0) c *= mollifier_symbol(moll_delta, g.k_squared_full(m));
    acc[m] += std::complex<double>(0.0, c) * s[m];
  }
}

}  // namespace detail

/// Anisotropic stress eps(t,x) : grad(omega_delta * u). With a spatial profile the
/// product with the profile is dealiased when `dealias` is set.
inline MatrixField anisotropic_stress(const Problem& pb, const MatrixField& Y, double t, bool dealias) {
  const SpectralGrid& g = pb.grid;
  MatrixField S = apply(g, pb.tensor, Y, t);
  if (dealias && !pb.tensor.space.is_constant())
    for (VectorField& row : S)
      for (Field& c : row) c = hoffns::dealias(g, c);
  return S;
}

/// omega_delta * div(S), row-wise divergence.
inline VectorField mollified_divergence(const Problem& pb, const MatrixField& S) {
  const SpectralGrid& g = pb.grid;
  VectorField out;
  for (int i = 0; i < g.dim(); ++i) {
    Spectrum acc(g.modes(), 0.0);
    for (int j = 0; j < g.dim(); ++j)
      detail::add_spectral_divergence(g, acc, S[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], j, 1.0,
                                      false, pb.delta);
    out.push_back(g.inverse(acc));
  }
  return out;
}

/// Quantities derived from one state that the right-hand side and the diagnostics share.
struct StateFields {
  VectorField u;
  MatrixField G;       // G[k][l] = d_l u^k
  Field div_u;
  VectorField u_delta;
  MatrixField Y;       // Y[k][l] = d_l (omega_delta * u)^k
  MatrixField S;       // eps : Y
  VectorField aniso;   // omega_delta * div S
  VectorField viscous; // mu Lap u + (mu+lambda) grad div u
  Field P;
  VectorField gradP;
  VectorField udot;    // material derivative from the momentum balance
};

inline StateFields evaluate_fields(const Problem& pb, const FluidState& s) {
  check_state(pb, s);
  const SpectralGrid& g = pb.grid;
  const int d = g.dim();
  const double mu = pb.tensor.mu, lam = pb.tensor.lambda;
  StateFields f;
  f.u = velocity(s);
  std::vector<Spectrum> uh;
  for (const Field& c : f.u) uh.push_back(g.forward(c));

  f.G = g.zero_matrix();
  Spectrum divh(g.modes(), 0.0);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      Spectrum t = spectral_derivative(g, uh[static_cast<std::size_t>(k)], l);
      if (k == l)
        for (std::size_t m = 0; m < g.modes(); ++m) divh[m] += t[m];
      f.G[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = g.inverse(t);
    }
  f.div_u = g.inverse(divh);

  f.viscous.clear();
  for (int i = 0; i < d; ++i) {
    Spectrum v(g.modes());
    for (std::size_t m = 0; m < g.modes(); ++m) {
      const double ki = g.derivative_wavenumber(m, i);
      // (mu+lambda) d_i div u = (mu+lambda) (i k_i) divh
      v[m] = -mu * g.k_squared(m) * uh[static_cast<std::size_t>(i)][m] +
             (mu + lam) * std::complex<double>(0.0, ki) * divh[m];
    }
    f.viscous.push_back(g.inverse(v));
  }

  f.u_delta.clear();
  f.Y = g.zero_matrix();
  for (int k = 0; k < d; ++k) {
    Spectrum ud = uh[static_cast<std::size_t>(k)];
    mollify_spectrum(g, ud, pb.delta);
    f.u_delta.push_back(g.inverse(ud));
    for (int l = 0; l < d; ++l)
      f.Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = g.inverse(spectral_derivative(g, ud, l));
  }
  if (pb.tensor.is_zero()) {
    f.S = g.zero_matrix();
    f.aniso = g.zero_vector();
  } else {
    f.S = anisotropic_stress(pb, f.Y, s.t, pb.dealias);
    f.aniso = mollified_divergence(pb, f.S);
  }

  f.P.resize(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) f.P[p] = pb.law.a * std::pow(s.rho[p], pb.law.gamma);
  f.gradP = gradient(g, f.P);

  f.udot = g.zero_vector();
  for (int i = 0; i < d; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    for (std::size_t p = 0; p < g.size(); ++p)
      f.udot[ii][p] = (f.viscous[ii][p] + f.aniso[ii][p] - f.gradP[ii][p]) / s.rho[p];
  }
  return f;
}

/// u_dot = (mu Lap u + (mu+lambda) grad div u + omega_delta*div(eps:grad u_delta) - grad P) / rho.
inline VectorField material_derivative(const Problem& pb, const FluidState& s) { return evaluate_fields(pb, s).udot; }

struct Rhs {
  Field d_rho;
  VectorField d_m;
};

inline Rhs assemble_rhs(const Problem& pb, const FluidState& s) {
  check_state(pb, s);
  const SpectralGrid& g = pb.grid;
  const int d = g.dim();
  const bool mask = pb.dealias;
  const double mu = pb.tensor.mu, lam = pb.tensor.lambda;
  Rhs r;

  Spectrum drho(g.modes(), 0.0);
  for (int j = 0; j < d; ++j) detail::add_spectral_divergence(g, drho, s.m[static_cast<std::size_t>(j)], j, -1.0, false);
  r.d_rho = g.inverse(drho);

  VectorField u = velocity(s);
  std::vector<Spectrum> uh;
  for (const Field& c : u) uh.push_back(g.forward(c));
  Spectrum divh(g.modes(), 0.0);
  for (int j = 0; j < d; ++j)
    for (std::size_t m = 0; m < g.modes(); ++m)
      divh[m] += std::complex<double>(0.0, g.derivative_wavenumber(m, j)) * uh[static_cast<std::size_t>(j)][m];

  Field P(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) P[p] = pb.law.a * std::pow(s.rho[p], pb.law.gamma);
  Spectrum Ph = g.forward(P);

  MatrixField S;
  const bool aniso = !pb.tensor.is_zero();
  if (aniso) {
    MatrixField Y = g.zero_matrix();
    for (int k = 0; k < d; ++k) {
      Spectrum ud = uh[static_cast<std::size_t>(k)];
      mollify_spectrum(g, ud, pb.delta);
      for (int l = 0; l < d; ++l)
        Y[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = g.inverse(spectral_derivative(g, ud, l));
    }
    S = anisotropic_stress(pb, Y, s.t, pb.dealias);
  }

  r.d_m.clear();
  Field flux(g.size());
  for (int i = 0; i < d; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    Spectrum acc(g.modes(), 0.0);
    for (int j = 0; j < d; ++j) {
      const Field& mi = s.m[ii];
      const Field& uj = u[static_cast<std::size_t>(j)];
      for (std::size_t p = 0; p < g.size(); ++p) flux[p] = mi[p] * uj[p];
      detail::add_spectral_divergence(g, acc, flux, j, -1.0, mask);
      if (aniso) detail::add_spectral_divergence(g, acc, S[ii][static_cast<std::size_t>(j)], j, 1.0, false, pb.delta);
    }
    for (std::size_t m = 0; m < g.modes(); ++m) {
      const std::complex<double> iki(0.0, g.derivative_wavenumber(m, i));
      std::complex<double> pterm = (mask && !g.in_dealias_band(m)) ? 0.0 : iki * Ph[m];
      acc[m] += -pterm - mu * g.k_squared(m) * uh[ii][m] + (mu + lam) * iki * divh[m];
    }
    r.d_m.push_back(g.inverse(acc));
  }
  return r;
}

/// cfl * min(h / (max|u| + c_max), h^2 / (2 d nu_max)), nu_max = (2mu+lambda+eps_upper)/rho_min.
inline double stable_dt(const Problem& pb, const FluidState& s, double cfl, double eps_upper) {
  const SpectralGrid& g = pb.grid;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0, umax = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    rmin = std::min(rmin, s.rho[p]);
    rmax = std::max(rmax, s.rho[p]);
    double u2 = 0.0;
    for (const Field& c : s.m) u2 += c[p] * c[p];
    umax = std::max(umax, std::sqrt(u2) / s.rho[p]);
  }
  const double h = g.spacing();
  const double cmax = std::sqrt(pb.law.gamma * pb.law.a * std::pow(rmax, pb.law.gamma - 1.0));
  const double nu = (2.0 * pb.tensor.mu + pb.tensor.lambda + eps_upper) / rmin;
  return cfl * std::min(h / (umax + cmax), h * h / (2.0 * g.dim() * nu));
}

namespace detail {

inline FluidState axpy(const FluidState& a, double alpha, const FluidState& b, double beta, const Rhs& r, double dtc) {
  // alpha*a + beta*(b + dtc*r)
  FluidState out;
  out.rho.resize(a.rho.size());
  for (std::size_t p = 0; p < a.rho.size(); ++p) out.rho[p] = alpha * a.rho[p] + beta * (b.rho[p] + dtc * r.d_rho[p]);
  out.m.resize(a.m.size());
  for (std::size_t i = 0; i < a.m.size(); ++i) {
    out.m[i].resize(a.m[i].size());
    for (std::size_t p = 0; p < a.m[i].size(); ++p)
      out.m[i][p] = alpha * a.m[i][p] + beta * (b.m[i][p] + dtc * r.d_m[i][p]);
  }
  return out;
}

}  // namespace detail

/// One SSP-RK3 (Shu-Osher) step of size dt.
inline FluidState step(const Problem& pb, const FluidState& s, double dt) {
  FluidState s1 = detail::axpy(s, 0.0, s, 1.0, assemble_rhs(pb, s), dt);
  s1.t = s.t + dt;
  FluidState s2 = detail::axpy(s, 0.75, s1, 0.25, assemble_rhs(pb, s1), dt);
  s2.t = s.t + 0.5 * dt;
  FluidState s3 = detail::axpy(s, 1.0 / 3.0, s2, 2.0 / 3.0, assemble_rhs(pb, s2), dt);
  s3.t = s.t + dt;
  return s3;
}

/// Sample times 0, c, 2c, ... up to t_end (always included); t = 1 is inserted when
/// it falls inside the run so the kink of min(1,t) sits on a node.
inline std::vector<double> sample_times(double t_end, double cadence) {
  std::vector<double> ts{0.0};
  if (t_end <= 0.0) return ts;
  const auto K = static_cast<long>(std::floor(t_end / cadence + 1e-9));
  for (long k = 1; k <= K; ++k) ts.push_back(static_cast<double>(k) * cadence);
  if (t_end - ts.back() > 1e-9 * cadence) ts.push_back(t_end);
  else ts.back() = t_end;
  if (t_end > 1.0 && std::none_of(ts.begin(), ts.end(), [](double t) { return std::abs(t - 1.0) < 1e-12; })) {
    ts.insert(std::upper_bound(ts.begin(), ts.end(), 1.0), 1.0);
  }
  return ts;
}

struct RunResult {
  std::vector<FluidState> samples;
  bool failed = false;
  std::string failure_kind;  // "positivity" or "blowup"
  double failure_time = 0.0;
  std::string message;
  long steps = 0;
};

/// Integrates from `init` through the given sample times, storing the state at each.
/// Positivity and blow-up failures end the run and are reported, not thrown.
inline RunResult run(const Problem& pb, const FluidState& init, const std::vector<double>& times, double cfl,
                     double eps_upper, const std::function<void(const FluidState&)>& on_sample = {}) {
  RunResult res;
  FluidState s = init;
  try {
    check_state(pb, s);
    std::size_t next = 0;
    while (next < times.size() && times[next] <= s.t + 1e-14) {
      s.t = times[next];
      res.samples.push_back(s);
      if (on_sample) on_sample(s);
      ++next;
    }
    while (next < times.size()) {
      const double target = times[next];
      double dt = stable_dt(pb, s, cfl, eps_upper);
      const double remaining = target - s.t;
      if (dt >= remaining) dt = remaining;
      else if (dt > 0.5 * remaining) dt = 0.5 * remaining;  // avoid a sliver step before the node
      FluidState ns = step(pb, s, dt);
      ++res.steps;
      if (dt == remaining) ns.t = target;
      s = std::move(ns);
      check_state(pb, s);
      if (s.t == target) {
        res.samples.push_back(s);
        if (on_sample) on_sample(s);
        ++next;
      }
    }
  } catch (const BlowUpError& e) {
    res.failed = true;
    res.failure_kind = "blowup";
    res.failure_time = e.time();
    res.message = e.what();
  } catch (const PositivityError& e) {
    res.failed = true;
    res.failure_kind = "positivity";
    res.failure_time = e.time();
    res.message = e.what();
  }
  return res;
}

/// Cap-and-shift min(xi, rho0 + delta) with xi chosen so the mean stays M, then
/// mollification of density and velocity.
struct RegularizedData {
  Field rho;
  VectorField u;
  double xi = 0.0;
};

inline RegularizedData regularize_initial_data(const SpectralGrid& g, const Field& rho0, const VectorField& u0,
                                               double delta, double M) {
  if (!(delta > 0.0 && delta < M)) throw DomainError("regularization needs 0 < delta < M");
  g.check_field(rho0);
  double rmax = -std::numeric_limits<double>::infinity(), sum = 0.0;
  for (double r : rho0) {
    if (!(r >= 0.0)) throw DomainError("initial density must be nonnegative");
    rmax = std::max(rmax, r);
    sum += r;
  }
  const double N = static_cast<double>(g.size());
  auto mass_at = [&](double xi) {
    double s = 0.0;
    for (double r : rho0) s += std::min(xi, r + delta);
    return s / N;
  };
  double lo = 0.0, hi = rmax + delta;
  if (!(mass_at(hi) >= M) || !(mass_at(lo) <= M) || std::abs(sum / N - M) > 1e-8 * M) {
    throw RegularizationError("cannot bracket the cap: initial mean " + std::to_string(sum / N) + " vs M " +
                              std::to_string(M));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass_at(mid) < M ? lo : hi) = mid;
  }
  // The mass is piecewise linear in xi; solve exactly on the final piece.
  double uncapped = 0.0;
  std::size_t capped = 0;
  for (double r : rho0) {
    if (r + delta < hi) uncapped += r + delta;
    else ++capped;
  }
  double xi = hi;
  if (capped > 0) xi = (N * M - uncapped) / static_cast<double>(capped);
  if (!std::isfinite(xi)) throw RegularizationError("cap value is not finite");

  RegularizedData out;
  out.xi = xi;
  Field capped_rho(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) capped_rho[p] = std::min(xi, rho0[p] + delta);
  out.rho = mollify(g, capped_rho, delta);
  out.u = mollify(g, u0, delta);
  return out;
}

inline FluidState make_state(const Field& rho, const VectorField& u, double t = 0.0) {
  FluidState s;
  s.rho = rho;
  s.t = t;
  for (const Field& c : u) {
    Field m(c.size());
    for (std::size_t p = 0; p < c.size(); ++p) m[p] = rho[p] * c[p];
    s.m.push_back(std::move(m));
  }
  return s;
}

}  // namespace hoffns
