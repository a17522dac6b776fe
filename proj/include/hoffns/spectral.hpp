#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

#include "hoffns/errors.hpp"

namespace hoffns {

using Field = std::vector<double>;
using VectorField = std::vector<Field>;
using MatrixField = std::vector<VectorField>;  // [row][col]
using Spectrum = std::vector<std::complex<double>>;

namespace detail {

// FFTW planning is not thread-safe; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using PlanHandle = std::shared_ptr<fftw_plan_s>;

}  // namespace detail

/// Uniform grid on [0, 2pi)^d with a real-to-complex spectral layout.
/// Physical points are row-major (last axis fastest); spectral modes store the
/// last axis up to n/2 only.
class SpectralGrid {
 public:
  SpectralGrid(int dim, int n) : dim_(dim), n_(n) {
    if (dim != 2 && dim != 3) throw DomainError("grid dimension must be 2 or 3");
    if (n < 4 || (n & (n - 1)) != 0) throw DomainError("grid size must be a power of two >= 4");
    size_ = 1;
    for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
    half_ = static_cast<std::size_t>(n / 2 + 1);
    modes_ = size_ / static_cast<std::size_t>(n) * half_;

    kint_.assign(static_cast<std::size_t>(dim) * modes_, 0);
    kder_.assign(static_cast<std::size_t>(dim) * modes_, 0.0);
    k2_.assign(modes_, 0.0);
    k2full_.assign(modes_, 0.0);
    weight_.assign(modes_, 2.0);
    band_.assign(modes_, 0);
    const int nyq = n / 2;
    for (std::size_t m = 0; m < modes_; ++m) {
      std::size_t rem = m;
      int idx[3] = {0, 0, 0};
      idx[dim - 1] = static_cast<int>(rem % half_);
      rem /= half_;
      for (int a = dim - 2; a >= 0; --a) {
        idx[a] = static_cast<int>(rem % static_cast<std::size_t>(n));
        rem /= static_cast<std::size_t>(n);
      }
      double k2 = 0.0, k2f = 0.0;
      for (int a = 0; a < dim; ++a) {
        int k = (a == dim - 1) ? idx[a] : (idx[a] <= nyq ? idx[a] : idx[a] - n);
        kint_[static_cast<std::size_t>(a) * modes_ + m] = k;
        double kd = (std::abs(k) == nyq) ? 0.0 : static_cast<double>(k);
        kder_[static_cast<std::size_t>(a) * modes_ + m] = kd;
        k2 += kd * kd;
        k2f += static_cast<double>(k) * k;
      }
      k2_[m] = k2;
      k2full_[m] = k2f;
      if (idx[dim - 1] == 0 || idx[dim - 1] == nyq) weight_[m] = 1.0;
      band_[m] = (3.0 * std::sqrt(k2f) <= static_cast<double>(n)) ? 1 : 0;
    }

    std::vector<double> rbuf(size_);
    std::vector<std::complex<double>> cbuf(modes_);
    int dims[3] = {n, n, n};
    auto* cptr = reinterpret_cast<fftw_complex*>(cbuf.data());
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = detail::PlanHandle(fftw_plan_dft_r2c(dim, dims, rbuf.data(), cptr, flags), detail::PlanDeleter{});
    inverse_plan_ = detail::PlanHandle(fftw_plan_dft_c2r(dim, dims, cptr, rbuf.data(), flags), detail::PlanDeleter{});
  }

  int dim() const { return dim_; }
  int n() const { return n_; }
  std::size_t size() const { return size_; }
  std::size_t modes() const { return modes_; }
  double spacing() const { return 2.0 * std::numbers::pi / n_; }
  double volume() const { return std::pow(2.0 * std::numbers::pi, dim_); }
  double cell_volume() const { return volume() / static_cast<double>(size_); }

  double coordinate(std::size_t point, int axis) const {
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= static_cast<std::size_t>(n_);
    return spacing() * static_cast<double>((point / stride) % static_cast<std::size_t>(n_));
  }

  int wavenumber(std::size_t mode, int axis) const { return kint_[static_cast<std::size_t>(axis) * modes_ + mode]; }
  /// Wavenumber used for first derivatives: the Nyquist component is dropped.
  double derivative_wavenumber(std::size_t mode, int axis) const {
    return kder_[static_cast<std::size_t>(axis) * modes_ + mode];
  }
  /// |k|^2 built from derivative wavenumbers, so that div grad = laplacian exactly.
  double k_squared(std::size_t mode) const { return k2_[mode]; }
  double k_squared_full(std::size_t mode) const { return k2full_[mode]; }
  bool in_dealias_band(std::size_t mode) const { return band_[mode] != 0; }
  /// Number of times a half-spectrum mode appears in the full spectrum.
  double hermitian_weight(std::size_t mode) const { return weight_[mode]; }

  Field zeros() const { return Field(size_, 0.0); }
  VectorField zero_vector() const { return VectorField(static_cast<std::size_t>(dim_), zeros()); }
  MatrixField zero_matrix() const { return MatrixField(static_cast<std::size_t>(dim_), zero_vector()); }

  Field sample(const std::function<double(const double*)>& f) const {
    Field out(size_);
    double x[3] = {0, 0, 0};
    for (std::size_t p = 0; p < size_; ++p) {
      for (int a = 0; a < dim_; ++a) x[a] = coordinate(p, a);
      out[p] = f(x);
    }
    return out;
  }

  /// Unnormalized forward transform.
  Spectrum forward(const Field& f) const {
    check_field(f);
    Spectrum out(modes_);
    fftw_execute_dft_r2c(forward_plan_.get(), const_cast<double*>(f.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  /// Inverse transform including the 1/N factor.
  Field inverse(const Spectrum& s) const {
    if (s.size() != modes_) throw ShapeError("spectrum size does not match grid");
    Spectrum scratch = s;  // c2r overwrites its input
    Field out(size_);
    fftw_execute_dft_c2r(inverse_plan_.get(), reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    const double inv = 1.0 / static_cast<double>(size_);
    for (double& v : out) v *= inv;
    return out;
  }

  void check_field(const Field& f) const {
    if (f.size() != size_) {
      throw ShapeError("field has " + std::to_string(f.size()) + " samples, grid has " + std::to_string(size_));
    }
  }

 private:
  int dim_;
  int n_;
  std::size_t size_ = 0;
  std::size_t half_ = 0;
  std::size_t modes_ = 0;
  std::vector<int> kint_;
  std::vector<double> kder_;
  std::vector<double> k2_;
  std::vector<double> k2full_;
  std::vector<double> weight_;
  std::vector<unsigned char> band_;
  detail::PlanHandle forward_plan_;
  detail::PlanHandle inverse_plan_;
};

// ---- spectral calculus ----------------------------------------------------

inline Spectrum spectral_derivative(const SpectralGrid& g, const Spectrum& s, int axis) {
  Spectrum out(s.size());
  for (std::size_t m = 0; m < s.size(); ++m) out[m] = std::complex<double>(0.0, g.derivative_wavenumber(m, axis)) * s[m];
  return out;
}

inline Field derivative(const SpectralGrid& g, const Field& f, int axis) {
  return g.inverse(spectral_derivative(g, g.forward(f), axis));
}

inline VectorField gradient(const SpectralGrid& g, const Field& f) {
  Spectrum s = g.forward(f);
  VectorField out;
  for (int a = 0; a < g.dim(); ++a) out.push_back(g.inverse(spectral_derivative(g, s, a)));
  return out;
}

/// out[k][l] = d_l v^k
inline MatrixField jacobian(const SpectralGrid& g, const VectorField& v) {
  MatrixField out;
  for (const Field& c : v) out.push_back(gradient(g, c));
  return out;
}

inline Field divergence(const SpectralGrid& g, const VectorField& v) {
  if (static_cast<int>(v.size()) != g.dim()) throw ShapeError("vector field rank does not match grid dimension");
  Spectrum acc(g.modes(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    Spectrum s = g.forward(v[static_cast<std::size_t>(a)]);
    for (std::size_t m = 0; m < g.modes(); ++m) acc[m] += std::complex<double>(0.0, g.derivative_wavenumber(m, a)) * s[m];
  }
  return g.inverse(acc);
}

namespace detail {

inline std::vector<Spectrum> curl_spectra(const SpectralGrid& g, const VectorField& v) {
  if (static_cast<int>(v.size()) != g.dim()) throw ShapeError("vector field rank does not match grid dimension");
  std::vector<Spectrum> s;
  for (const Field& c : v) s.push_back(g.forward(c));
  const std::complex<double> I(0.0, 1.0);
  std::vector<Spectrum> out;
  if (g.dim() == 2) {
    Spectrum c(g.modes());
    for (std::size_t m = 0; m < g.modes(); ++m)
      c[m] = I * (g.derivative_wavenumber(m, 0) * s[1][m] - g.derivative_wavenumber(m, 1) * s[0][m]);
    out.push_back(std::move(c));
  } else {
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      Spectrum r(g.modes());
      for (std::size_t m = 0; m < g.modes(); ++m)
        r[m] = I * (g.derivative_wavenumber(m, b) * s[static_cast<std::size_t>(c)][m] -
                    g.derivative_wavenumber(m, c) * s[static_cast<std::size_t>(b)][m]);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace detail

/// Scalar vorticity d_1 v^2 - d_2 v^1 for d=2 (one component), full curl for d=3.
inline VectorField curl(const SpectralGrid& g, const VectorField& v) {
  VectorField out;
  for (const Spectrum& s : detail::curl_spectra(g, v)) out.push_back(g.inverse(s));
  return out;
}

inline Field laplacian(const SpectralGrid& g, const Field& f) {
  Spectrum s = g.forward(f);
  for (std::size_t m = 0; m < g.modes(); ++m) s[m] *= -g.k_squared(m);
  return g.inverse(s);
}

/// Solves Delta w = f - mean(f) with mean(w) = 0.
inline Field inv_laplacian(const SpectralGrid& g, const Field& f) {
  Spectrum s = g.forward(f);
  for (std::size_t m = 0; m < g.modes(); ++m) {
    const double k2 = g.k_squared(m);
    s[m] = k2 > 0.0 ? -s[m] / k2 : 0.0;
  }
  return g.inverse(s);
}

/// Delta^{-1} div v; the mean mode is projected out.
inline Field inv_lap_div(const SpectralGrid& g, const VectorField& v) {
  if (static_cast<int>(v.size()) != g.dim()) throw ShapeError("vector field rank does not match grid dimension");
  Spectrum acc(g.modes(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    Spectrum s = g.forward(v[static_cast<std::size_t>(a)]);
    for (std::size_t m = 0; m < g.modes(); ++m) acc[m] += g.derivative_wavenumber(m, a) * s[m];
  }
  for (std::size_t m = 0; m < g.modes(); ++m) {
    const double k2 = g.k_squared(m);
    acc[m] = k2 > 0.0 ? std::complex<double>(0.0, -1.0) * acc[m] / k2 : 0.0;
  }
  return g.inverse(acc);
}

/// Delta^{-1} curl v (one component for d=2, three for d=3).
inline VectorField inv_lap_curl(const SpectralGrid& g, const VectorField& v) {
  VectorField out;
  for (Spectrum s : detail::curl_spectra(g, v)) {
    for (std::size_t m = 0; m < g.modes(); ++m) {
      const double k2 = g.k_squared(m);
      s[m] = k2 > 0.0 ? -s[m] / k2 : 0.0;
    }
    out.push_back(g.inverse(s));
  }
  return out;
}

// ---- mollifier and dealiasing ---------------------------------------------

/// Fourier symbol of the mollifier: exp(-(delta |k|)^2 / 2).
inline double mollifier_symbol(double delta, double k2) { return std::exp(-0.5 * delta * delta * k2); }

inline void mollify_spectrum(const SpectralGrid& g, Spectrum& s, double delta) {
  for (std::size_t m = 0; m < g.modes(); ++m) s[m] *= mollifier_symbol(delta, g.k_squared_full(m));
}

inline Field mollify(const SpectralGrid& g, const Field& f, double delta) {
  if (!(delta > 0.0)) throw DomainError("mollification width must be positive");
  Spectrum s = g.forward(f);
  mollify_spectrum(g, s, delta);
  return g.inverse(s);
}

inline VectorField mollify(const SpectralGrid& g, const VectorField& v, double delta) {
  VectorField out;
  for (const Field& c : v) out.push_back(mollify(g, c, delta));
  return out;
}

inline void dealias_spectrum(const SpectralGrid& g, Spectrum& s) {
  for (std::size_t m = 0; m < g.modes(); ++m)
    if (!g.in_dealias_band(m)) s[m] = 0.0;
}

/// Projects onto the modes with |k| <= n/3.
inline Field dealias(const SpectralGrid& g, const Field& f) {
  Spectrum s = g.forward(f);
  dealias_spectrum(g, s);
  return g.inverse(s);
}

// ---- commutators -----------------------------------------------------------

/// b d_i (a_delta) - (b d_i a)_delta
inline Field commutator_r1(const SpectralGrid& g, const Field& b, const Field& a, double delta, int axis) {
  Field da = derivative(g, a, axis);
  Field da_delta = derivative(g, mollify(g, a, delta), axis);
  Field prod(g.size()), out(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) prod[p] = b[p] * da[p];
  Field prod_delta = mollify(g, prod, delta);
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = b[p] * da_delta[p] - prod_delta[p];
  return out;
}

/// d_i (a_delta b) - d_i ((a b)_delta)
inline Field commutator_r2(const SpectralGrid& g, const Field& b, const Field& a, double delta, int axis) {
  Field ad = mollify(g, a, delta);
  Field ab(g.size()), adb(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    ab[p] = a[p] * b[p];
    adb[p] = ad[p] * b[p];
  }
  Field ab_delta = mollify(g, ab, delta);
  Field out(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = adb[p] - ab_delta[p];
  return derivative(g, out, axis);
}

inline double lp_norm(const SpectralGrid& g, const Field& f, double p);
inline double lp_norm(const SpectralGrid& g, const VectorField& v, double p);

/// ||r1||_s / (||grad b||_p ||a||_beta) with 1/s = 1/p + 1/beta.
inline double commutator_constant(const SpectralGrid& g, const Field& b, const Field& a, double delta, int axis,
                                  double p, double beta) {
  if (p < 1.0 || beta < 1.0) throw DomainError("commutator exponents must be >= 1");
  const double s = 1.0 / (1.0 / p + 1.0 / beta);
  const double denom = lp_norm(g, gradient(g, b), p) * lp_norm(g, a, beta);
  if (denom == 0.0) return 0.0;
  return lp_norm(g, commutator_r1(g, b, a, delta, axis), s) / denom;
}

// ---- norms and integrals ---------------------------------------------------

inline double integral(const SpectralGrid& g, const Field& f) {
  g.check_field(f);
  double s = 0.0;
  for (double v : f) s += v;
  return s * g.cell_volume();
}

inline double mean(const SpectralGrid& g, const Field& f) { return integral(g, f) / g.volume(); }

/// (int |f|^p)^(1/p) by the rectangle rule; p = inf gives the max norm.
inline double lp_norm(const SpectralGrid& g, const Field& f, double p) {
  g.check_field(f);
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : f) s += std::pow(std::abs(v), p);
  return std::pow(s * g.cell_volume(), 1.0 / p);
}

/// Pointwise Euclidean magnitude of a vector field.
inline Field magnitude(const VectorField& v) {
  Field out(v.at(0).size(), 0.0);
  for (const Field& c : v)
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += c[p] * c[p];
  for (double& x : out) x = std::sqrt(x);
  return out;
}

/// Pointwise Frobenius magnitude of a matrix field.
inline Field magnitude(const MatrixField& A) {
  Field out(A.at(0).at(0).size(), 0.0);
  for (const VectorField& row : A)
    for (const Field& c : row)
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += c[p] * c[p];
  for (double& x : out) x = std::sqrt(x);
  return out;
}

inline double lp_norm(const SpectralGrid& g, const VectorField& v, double p) { return lp_norm(g, magnitude(v), p); }
inline double lp_norm(const SpectralGrid& g, const MatrixField& A, double p) { return lp_norm(g, magnitude(A), p); }

/// Grid inner product int f g evaluated from the two half spectra.
inline double spectral_inner(const SpectralGrid& g, const Spectrum& a, const Spectrum& b) {
  double s = 0.0;
  for (std::size_t m = 0; m < g.modes(); ++m) s += g.hermitian_weight(m) * std::real(a[m] * std::conj(b[m]));
  const double N = static_cast<double>(g.size());
  return s * g.cell_volume() / N;
}

inline double inner(const SpectralGrid& g, const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
  return s * g.cell_volume();
}

struct CzNorms {
  double curl = 0.0;
  double div = 0.0;
  double grad = 0.0;
};

/// L^p norms of curl u, div u and grad u.
inline CzNorms cz_split_norms(const SpectralGrid& g, const VectorField& u, double p) {
  if (p != 2.0 && p != 3.0 && p != 4.0) throw DomainError("cz_split_norms supports p in {2,3,4}");
  CzNorms r;
  r.curl = lp_norm(g, curl(g, u), p);
  r.div = lp_norm(g, divergence(g, u), p);
  r.grad = lp_norm(g, jacobian(g, u), p);
  return r;
}

}  // namespace hoffns
