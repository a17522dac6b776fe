#pragma once

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hoffns/errors.hpp"

namespace hoffns {

/// Barotropic law p(rho) = a * rho^gamma around the reference mean density M.
struct PressureLaw {
  double a = 1.0;
  double gamma = 2.0;
  double M = 1.0;

  /// Throws DomainError (or UnsupportedError for gamma <= 1) when the law is
  /// unusable in dimension `dim`.
  void validate(int dim) const {
    if (!(a > 0.0)) throw DomainError("pressure coefficient a must be positive");
    if (!(M > 0.0)) throw DomainError("reference density M must be positive");
    if (!(gamma > 1.0)) throw UnsupportedError("adiabatic exponent gamma must exceed 1");
    if (dim != 2 && dim != 3) throw DomainError("dimension must be 2 or 3");
    const double lo = static_cast<double>(dim) / (4.0 - dim);
    if (gamma < lo) {
      throw DomainError("gamma=" + std::to_string(gamma) + " is below d/(4-d)=" + std::to_string(lo));
    }
  }
};

namespace detail {

inline void require_nonneg(double rho) {
  if (!(rho >= 0.0)) throw DomainError("density must be nonnegative, got " + std::to_string(rho));
}

template <class Real>
Real rpow(const Real& x, double e) {
  using std::pow;
  return pow(x, Real(e));
}

// Closed forms lose most digits to cancellation when rho is close to M.
// Inside this band the defining integral is evaluated with a fixed
// Gauss-Legendre rule instead; the integrand is smooth there.
inline constexpr double kNearBand = 0.1;

template <class Real>
bool near_reference(const PressureLaw& law, const Real& rho) {
  using std::abs;
  return abs(rho - Real(law.M)) < Real(kNearBand * law.M);
}

// rho * int_M^rho |P(s)-P(M)|^(ell-1) (P(s)-P(M)) / s^2 ds, ell in {1,2,3}
template <class Real>
Real near_integral(const PressureLaw& law, const Real& rho, int ell) {
  const Real a(law.a);
  const Real pm = a * rpow(Real(law.M), law.gamma);
  auto f = [&](const Real& s) {
    using std::abs;
    const Real q = a * rpow(s, law.gamma) - pm;
    Real g = q;
    for (int e = 1; e < ell; ++e) g *= abs(q);
    return g / (s * s);
  };
  Real v = boost::math::quadrature::gauss<Real, 30>::integrate(f, Real(law.M), rho);
  return rho * v;
}

}  // namespace detail

template <class Real = double>
Real pressure(const PressureLaw& law, const Real& rho) {
  detail::require_nonneg(static_cast<double>(rho));
  return Real(law.a) * detail::rpow(rho, law.gamma);
}

/// Relative entropy rho^g/(g-1) - M^g/(g-1) - g M^(g-1)/(g-1) (rho - M), times a.
template <class Real = double>
Real h1_rel(const PressureLaw& law, const Real& rho) {
  detail::require_nonneg(static_cast<double>(rho));
  if (!(law.gamma > 1.0)) throw UnsupportedError("h1_rel requires gamma > 1");
  if (detail::near_reference(law, rho)) return detail::near_integral(law, rho, 1);
  const double g = law.gamma;
  const Real M(law.M);
  const Real a(law.a);
  const Real mg = detail::rpow(M, g);
  const Real mg1 = detail::rpow(M, g - 1.0);
  return a * (detail::rpow(rho, g) / Real(g - 1.0) + mg - Real(g) * rho * mg1 / Real(g - 1.0));
}

/// H_ell for ell in {2,3}: rho * int_M^rho |P(s)-P(M)|^(ell-1) (P(s)-P(M)) / s^2 ds.
template <class Real = double>
Real h_ell(const PressureLaw& law, const Real& rho, int ell) {
  if (ell != 2 && ell != 3) throw UnsupportedError("h_ell supports ell = 2 or 3, got " + std::to_string(ell));
  detail::require_nonneg(static_cast<double>(rho));
  if (detail::near_reference(law, rho)) return detail::near_integral(law, rho, ell);

  const double g = law.gamma;
  const Real M(law.M);
  const Real a(law.a);
  const Real mg = detail::rpow(M, g);
  const Real m2g = detail::rpow(M, 2.0 * g);
  if (ell == 2) {
    // rho*F(x) with F the antiderivative of (s^g - M^g)^2 / s^2, continuous at rho = 0
    auto rhoF = [&](const Real& x, const Real& r) {
      return detail::rpow(x, 2.0 * g - 1.0) * r / Real(2.0 * g - 1.0) -
             Real(2) * mg * detail::rpow(x, g - 1.0) * r / Real(g - 1.0) - m2g * r / x;
    };
    Real top = detail::rpow(rho, 2.0 * g) / Real(2.0 * g - 1.0) -
               Real(2) * mg * detail::rpow(rho, g) / Real(g - 1.0) - m2g;
    Real v = a * a * (top - rhoF(M, rho));
    return rho < M ? -v : v;
  }
  // ell == 3: odd power keeps the sign, so no orientation flip.
  const Real m3g = detail::rpow(M, 3.0 * g);
  auto rhoF = [&](const Real& x, const Real& r) {
    return detail::rpow(x, 3.0 * g - 1.0) * r / Real(3.0 * g - 1.0) -
           Real(3) * mg * detail::rpow(x, 2.0 * g - 1.0) * r / Real(2.0 * g - 1.0) +
           Real(3) * m2g * detail::rpow(x, g - 1.0) * r / Real(g - 1.0) + m3g * r / x;
  };
  Real top = detail::rpow(rho, 3.0 * g) / Real(3.0 * g - 1.0) -
             Real(3) * mg * detail::rpow(rho, 2.0 * g) / Real(2.0 * g - 1.0) +
             Real(3) * m2g * detail::rpow(rho, g) / Real(g - 1.0) + m3g;
  return a * a * a * (top - rhoF(M, rho));
}

/// H3 written as the grouped sum
///   (rho^3g - M^(3g-1) rho)/(3g-1) - 3M^g (rho^2g - M^(2g-1) rho)/(2g-1)
///   + 3M^2g (rho^g - M^(g-1) rho)/(g-1) + M^3g - rho M^(3g-1),
/// scaled by a^3. Kept separate from h_ell so the two algebraic routes can be compared.
inline double h3_expansion(const PressureLaw& law, double rho) {
  detail::require_nonneg(rho);
  const double g = law.gamma, M = law.M;
  const double r = rho;
  double v = (std::pow(r, 3 * g) - std::pow(M, 3 * g - 1) * r) / (3 * g - 1) -
             3 * std::pow(M, g) * (std::pow(r, 2 * g) - std::pow(M, 2 * g - 1) * r) / (2 * g - 1) +
             3 * std::pow(M, 2 * g) * (std::pow(r, g) - std::pow(M, g - 1) * r) / (g - 1) +
             std::pow(M, 3 * g) - r * std::pow(M, 3 * g - 1);
  return law.a * law.a * law.a * v;
}

/// Adaptive Gauss-Kronrod evaluation of the defining integral (ell = 1 gives H1).
/// Integrates in log(s) so the 1/s^2 weight stays tame for small rho.
inline double h_ell_quad(const PressureLaw& law, double rho, int ell) {
  if (ell < 1 || ell > 3) throw UnsupportedError("h_ell_quad supports ell in {1,2,3}");
  if (!(rho > 0.0)) throw DomainError("h_ell_quad requires rho > 0");
  if (rho == law.M) return 0.0;
  const double pm = law.a * std::pow(law.M, law.gamma);
  auto f = [&](double v) {
    const double s = std::exp(v);
    const double q = law.a * std::pow(s, law.gamma) - pm;
    double g = q;
    for (int e = 1; e < ell; ++e) g *= std::abs(q);
    return g / s;  // (g / s^2) * ds/dv
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err = 0.0, l1 = 0.0;
  const double lo = std::log(law.M), hi = std::log(rho);
  auto converged = [&](double v) { return std::isfinite(v) && err <= 1e-10 * std::max(std::abs(v), l1); };
  double val = GK::integrate(f, lo, hi, 0, 0.0, &err, &l1);
  if (!converged(val)) val = GK::integrate(f, lo, hi, 20, 1e-13, &err, &l1);
  if (!converged(val)) {
    throw AccuracyError("h_ell_quad did not converge (error estimate " + std::to_string(err) + ")");
  }
  return rho * val;
}

/// RHS - LHS of (P(rho)-P(M))^2 <= 2 gamma a M^gamma H1 + (2 gamma - 1) H2.
template <class Real = double>
Real ineg2_gap(const PressureLaw& law, const Real& rho) {
  const Real g(law.gamma);
  const Real alpha = Real(2) * g * Real(law.a) * detail::rpow(Real(law.M), law.gamma);
  const Real q = pressure<Real>(law, rho) - pressure<Real>(law, Real(law.M));
  return alpha * h1_rel<Real>(law, rho) + (Real(2) * g - Real(1)) * h_ell<Real>(law, rho, 2) - q * q;
}

}  // namespace hoffns
