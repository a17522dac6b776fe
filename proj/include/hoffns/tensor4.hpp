#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hoffns/errors.hpp"
#include "hoffns/spectral.hpp"

namespace hoffns {

/// Scalar amplitude amp(t) multiplying the whole tensor.
struct TimeModulation {
  enum class Kind { Constant, Sine };
  Kind kind = Kind::Constant;
  double omega = 1.0;
  double offset = 0.0;

  double value(double t) const { return kind == Kind::Constant ? 1.0 : offset + std::sin(omega * t); }
  double derivative(double t) const { return kind == Kind::Constant ? 0.0 : omega * std::cos(omega * t); }
};

/// Spatial profile prof(x) multiplying the whole tensor.
struct SpaceModulation {
  enum class Kind { Constant, CosineProfile };
  Kind kind = Kind::Constant;
  int axis = 0;
  double offset = 0.0;

  double value(const double* x) const { return kind == Kind::Constant ? 1.0 : offset + std::cos(x[axis]); }
  double derivative(const double* x, int a) const {
    if (kind == Kind::Constant || a != axis) return 0.0;
    return -std::sin(x[axis]);
  }
  bool is_constant() const { return kind == Kind::Constant; }
};

/// eps_ijkl(t,x) = amp(t) prof(x) core_ijkl together with the isotropic pair (mu, lambda).
struct ViscosityTensor {
  int d = 2;
  double mu = 1.0;
  double lambda = 0.0;
  std::vector<double> core;  // d^4 entries, index ((i*d+j)*d+k)*d+l
  TimeModulation time;
  SpaceModulation space;

  std::size_t index(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * d + j) * d + k) * d + l);
  }
  double operator()(int i, int j, int k, int l) const { return core[index(i, j, k, l)]; }
  bool is_zero() const {
    return std::all_of(core.begin(), core.end(), [](double v) { return v == 0.0; });
  }
  bool is_modulated() const {
    return time.kind != TimeModulation::Kind::Constant || space.kind != SpaceModulation::Kind::Constant;
  }

  /// Pointwise multiplier amp(t) prof(x) on the grid.
  Field scale_field(const SpectralGrid& g, double t) const {
    const double amp = time.value(t);
    if (space.is_constant()) return Field(g.size(), amp);
    return g.sample([&](const double* x) { return amp * space.value(x); });
  }
};

struct CoercivitySpectrum {
  double eps_upper = 0.0;
  double eps_lower = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// The d^2 x d^2 matrix M_{(ij),(kl)} = eps_ijkl of the constant core.
inline Eigen::MatrixXd core_matrix(const ViscosityTensor& T) {
  const int D = T.d * T.d;
  Eigen::MatrixXd A(D, D);
  for (int r = 0; r < D; ++r)
    for (int c = 0; c < D; ++c) A(r, c) = T.core[static_cast<std::size_t>(r * D + c)];
  return A;
}

struct SymmetryViolation {
  double max_violation = 0.0;
  std::array<int, 4> index{0, 0, 0, 0};
};

inline SymmetryViolation symmetry_violation(const ViscosityTensor& T) {
  SymmetryViolation v;
  const int d = T.d;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double e = std::abs(T(i, j, k, l) - T(k, l, i, j));
          if (e > v.max_violation) {
            v.max_violation = e;
            v.index = {i, j, k, l};
          }
        }
  return v;
}

inline void validate_shape(const ViscosityTensor& T) {
  if (T.d != 2 && T.d != 3) throw DomainError("tensor dimension must be 2 or 3");
  if (T.core.size() != static_cast<std::size_t>(T.d * T.d * T.d * T.d)) {
    throw ShapeError("tensor core needs d^4 = " + std::to_string(T.d * T.d * T.d * T.d) + " entries");
  }
}

inline void require_symmetric(const ViscosityTensor& T) {
  validate_shape(T);
  SymmetryViolation v = symmetry_violation(T);
  if (v.max_violation > 0.0) {
    std::ostringstream os;
    os << "eps_ijkl != eps_klij at (i,j,k,l)=(" << v.index[0] + 1 << "," << v.index[1] + 1 << "," << v.index[2] + 1
       << "," << v.index[3] + 1 << "), violation " << v.max_violation;
    throw HypothesisError("H1", os.str());
  }
}

/// Extreme eigenvalues of the constant core.
inline CoercivitySpectrum core_spectrum(const ViscosityTensor& T) {
  require_symmetric(T);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(core_matrix(T), Eigen::EigenvaluesOnly);
  CoercivitySpectrum s;
  s.lambda_min = es.eigenvalues().minCoeff();
  s.lambda_max = es.eigenvalues().maxCoeff();
  s.eps_upper = std::max(s.lambda_max, 0.0);
  s.eps_lower = std::max(-s.lambda_min, 0.0);
  return s;
}

/// Spectrum of scale * core.
inline CoercivitySpectrum scaled_spectrum(const CoercivitySpectrum& core, double scale) {
  CoercivitySpectrum s;
  s.lambda_min = scale >= 0 ? scale * core.lambda_min : scale * core.lambda_max;
  s.lambda_max = scale >= 0 ? scale * core.lambda_max : scale * core.lambda_min;
  s.eps_upper = std::max(s.lambda_max, 0.0);
  s.eps_lower = std::max(-s.lambda_min, 0.0);
  return s;
}

/// Tight constants for the unmodulated core; throws CoercivityError when mu <= eps_lower.
inline CoercivitySpectrum coercivity_bounds(const ViscosityTensor& T) {
  CoercivitySpectrum s = core_spectrum(T);
  if (!(T.mu - s.eps_lower > 0.0)) {
    throw CoercivityError("mu - eps_lower = " + std::to_string(T.mu - s.eps_lower) + " <= 0");
  }
  return s;
}

using Point = std::array<double, 3>;

struct HypothesisReport {
  bool h1_pass = true;
  double symmetry_violation = 0.0;
  std::array<int, 4> symmetry_index{0, 0, 0, 0};
  std::string h1_message;

  CoercivitySpectrum spectrum;  // worst case over samples
  double coercivity_margin = 0.0;  // mu - eps_lower
  bool h2_pass = true;
  bool nonnegative_form = true;  // lambda_min >= 0 everywhere

  double sup_dt = 0.0;
  double sup_grad = 0.0;
  bool h3_pass = true;

  double sup_norm = 0.0;
  double h4_ratio = 0.0;
  bool h4_pass = true;

  bool pass() const { return h1_pass && h2_pass && h3_pass && h4_pass; }
  /// Name of the first failing hypothesis, empty when all pass.
  std::string first_failure() const {
    if (!h1_pass) return "H1";
    if (!h2_pass) return "H2";
    if (!h3_pass) return "H3";
    if (!h4_pass) return "H4";
    return {};
  }
};

/// Evaluates (H1)-(H4) over the sample sets. An asymmetric core is recorded as an
/// H1 failure and the remaining checks are skipped.
inline HypothesisReport check_hypotheses(const ViscosityTensor& T, double eta, const std::vector<double>& times,
                                         const std::vector<Point>& points) {
  if (!(eta > 0.0)) throw DomainError("eta must be positive");
  if (times.empty() || points.empty()) throw DomainError("hypothesis check needs nonempty sample sets");
  validate_shape(T);
  HypothesisReport r;
  SymmetryViolation sv = symmetry_violation(T);
  r.symmetry_violation = sv.max_violation;
  r.symmetry_index = sv.index;
  try {
    require_symmetric(T);
  } catch (const HypothesisError& e) {
    r.h1_pass = false;
    r.h1_message = e.what();
    r.h2_pass = r.h3_pass = r.h4_pass = false;
    return r;
  }

  const CoercivitySpectrum core = core_spectrum(T);
  const double core_norm = std::max(std::abs(core.lambda_min), std::abs(core.lambda_max));
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  for (double t : times) {
    const double amp = T.time.value(t), damp = T.time.derivative(t);
    for (const Point& x : points) {
      const double prof = T.space.value(x.data());
      const double s = amp * prof;
      smin = std::min(smin, s);
      smax = std::max(smax, s);
      r.sup_dt = std::max(r.sup_dt, std::abs(damp * prof) * core_norm);
      double g2 = 0.0;
      for (int a = 0; a < T.d; ++a) {
        double gd = amp * T.space.derivative(x.data(), a);
        g2 += gd * gd;
      }
      r.sup_grad = std::max(r.sup_grad, std::sqrt(g2) * core_norm);
    }
  }
  CoercivitySpectrum lo = scaled_spectrum(core, smin), hi = scaled_spectrum(core, smax);
  r.spectrum.lambda_min = std::min(lo.lambda_min, hi.lambda_min);
  r.spectrum.lambda_max = std::max(lo.lambda_max, hi.lambda_max);
  r.spectrum.eps_upper = std::max(r.spectrum.lambda_max, 0.0);
  r.spectrum.eps_lower = std::max(-r.spectrum.lambda_min, 0.0);
  r.coercivity_margin = T.mu - r.spectrum.eps_lower;
  r.h2_pass = T.mu > 0.0 && T.mu + T.lambda >= 0.0 && r.coercivity_margin > 0.0;
  r.nonnegative_form = r.spectrum.lambda_min >= 0.0;
  r.h3_pass = std::isfinite(r.sup_dt) && std::isfinite(r.sup_grad);
  r.sup_norm = std::max(std::abs(r.spectrum.lambda_min), std::abs(r.spectrum.lambda_max));
  r.h4_ratio = r.sup_norm / (eta * std::min(T.mu, 2.0 * T.mu + T.lambda));
  r.h4_pass = r.h4_ratio <= 1.0;
  return r;
}

/// Contraction of a constant core with a matrix field: out[i][j] = scale * core_ijkl G[k][l].
/// `scale` may be empty (meaning 1).
inline MatrixField contract(const SpectralGrid& g, const ViscosityTensor& T, const MatrixField& G,
                            const Field& scale) {
  const int d = T.d;
  if (d != g.dim() || static_cast<int>(G.size()) != d) throw ShapeError("gradient field does not match tensor dimension");
  MatrixField out = g.zero_matrix();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Field& o = out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const double c = T(i, j, k, l);
          if (c == 0.0) continue;
          const Field& src = G[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
          for (std::size_t p = 0; p < g.size(); ++p) o[p] += c * src[p];
        }
      if (!scale.empty())
        for (std::size_t p = 0; p < g.size(); ++p) o[p] *= scale[p];
    }
  return out;
}

/// eps_ijkl(t,x) d_l u^k with grad_u[k][l] = d_l u^k.
inline MatrixField apply(const SpectralGrid& g, const ViscosityTensor& T, const MatrixField& grad_u, double t) {
  return contract(g, T, grad_u, T.scale_field(g, t));
}

/// A coefficient field written as scale(x) * core.
struct CoefficientField {
  Field scale;
};

struct TensorDerivatives {
  CoefficientField dt;                 // amp'(t) prof(x)
  std::vector<CoefficientField> grad;  // amp(t) d_a prof(x), one per axis
};

inline TensorDerivatives tensor_derivatives(const SpectralGrid& g, const ViscosityTensor& T, double t) {
  TensorDerivatives r;
  const double amp = T.time.value(t), damp = T.time.derivative(t);
  r.dt.scale = g.sample([&](const double* x) { return damp * T.space.value(x); });
  for (int a = 0; a < g.dim(); ++a) {
    r.grad.push_back({g.sample([&](const double* x) { return amp * T.space.derivative(x, a); })});
  }
  return r;
}

// ---- presets ---------------------------------------------------------------

inline ViscosityTensor make_tensor(int d, double mu, double lambda) {
  ViscosityTensor T;
  T.d = d;
  T.mu = mu;
  T.lambda = lambda;
  T.core.assign(static_cast<std::size_t>(d * d * d * d), 0.0);
  return T;
}

inline ViscosityTensor zero_tensor(int d, double mu, double lambda) { return make_tensor(d, mu, lambda); }

/// c delta_ik delta_jl, the identity on d x d matrices scaled by c.
inline ViscosityTensor scaled_identity_tensor(int d, double mu, double lambda, double c) {
  ViscosityTensor T = make_tensor(d, mu, lambda);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) T.core[T.index(i, j, i, j)] = c;
  return T;
}

/// mu_t delta_ik delta_jl + (mu_t + lambda_t) delta_ij delta_kl; its divergence is
/// mu_t Lap u + (mu_t + lambda_t) grad div u.
inline ViscosityTensor isotropic_tensor(int d, double mu, double lambda, double mu_t, double lambda_t) {
  ViscosityTensor T = make_tensor(d, mu, lambda);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      T.core[T.index(i, j, i, j)] += mu_t;
      if (i == j)
        for (int k = 0; k < d; ++k) T.core[T.index(i, i, k, k)] += mu_t + lambda_t;
    }
  return T;
}

/// Random symmetric core with operator norm exactly `amp` on d x d matrices.
inline ViscosityTensor random_symmetric_tensor(int d, double mu, double lambda, std::uint64_t seed, double amp) {
  ViscosityTensor T = make_tensor(d, mu, lambda);
  const int D = d * d;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::MatrixXd A(D, D);
  for (int r = 0; r < D; ++r)
    for (int c = r; c < D; ++c) A(r, c) = A(c, r) = U(rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int r = 0; r < D; ++r)
    for (int c = 0; c < D; ++c) T.core[static_cast<std::size_t>(r * D + c)] = amp * A(r, c) / norm;
  return T;
}

/// Inline coefficient table, row-major over (i,j,k,l). Symmetry is not enforced here.
inline ViscosityTensor table_tensor(int d, double mu, double lambda, std::vector<double> table) {
  ViscosityTensor T = make_tensor(d, mu, lambda);
  if (table.size() != T.core.size()) {
    throw ShapeError("tensor table needs " + std::to_string(T.core.size()) + " entries, got " +
                     std::to_string(table.size()));
  }
  T.core = std::move(table);
  return T;
}

}  // namespace hoffns
