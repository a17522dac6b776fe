#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <array>
#include <vector>

#include "hoffns/errors.hpp"
#include "hoffns/scalar_laws.hpp"
#include "hoffns/spectral.hpp"

namespace hoffns {

struct InitialSpec {
  std::string kind = "equilibrium";  // equilibrium | acoustic | density_bump | shear | random_bandlimited
  int k = 1;
  double eps = 0.0;
  std::uint64_t seed = 0;
  int kmax = 3;
};

struct InitialData {
  Field rho;
  VectorField u;
};

/// Random trigonometric polynomial with integer modes 0 < |k|_inf <= kmax, mean zero,
/// scaled to unit max norm.
inline Field random_bandlimited_field(const SpectralGrid& g, std::mt19937_64& rng, int kmax) {
  std::normal_distribution<double> N01(0.0, 1.0);
  const int d = g.dim();
  std::vector<std::array<int, 3>> ks;
  std::vector<double> ca, cb;
  const int k2lo = (d == 3) ? -kmax : 0;
  for (int k0 = -kmax; k0 <= kmax; ++k0)
    for (int k1 = -kmax; k1 <= kmax; ++k1)
      for (int k2 = k2lo; k2 <= (d == 3 ? kmax : 0); ++k2) {
        std::array<int, 3> k{k0, k1, k2};
        // keep one representative of each +-k pair
        bool positive = false;
        for (int a = 0; a < 3; ++a)
          if (k[a] != 0) {
            positive = k[a] > 0;
            break;
          }
        if (!positive) continue;
        ks.push_back(k);
        ca.push_back(N01(rng));
        cb.push_back(N01(rng));
      }
  Field f = g.sample([&](const double* x) {
    double v = 0.0;
    for (std::size_t q = 0; q < ks.size(); ++q) {
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += ks[q][a] * x[a];
      v += ca[q] * std::cos(ph) + cb[q] * std::sin(ph);
    }
    return v;
  });
  double mx = 0.0;
  for (double v : f) mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double& v : f) v /= mx;
  return f;
}

/// Manufactured initial data; every density has mean exactly M up to round-off.
inline InitialData make_initial(const SpectralGrid& g, const PressureLaw& law, const InitialSpec& spec) {
  const int d = g.dim();
  const double M = law.M;
  InitialData out;
  out.u = g.zero_vector();
  if (spec.kind == "equilibrium") {
    out.rho = Field(g.size(), M);
  } else if (spec.kind == "acoustic") {
    // right-moving linear wave along x1
    const double c = std::sqrt(law.gamma * law.a * std::pow(M, law.gamma - 1.0));
    out.rho = g.sample([&](const double* x) { return M * (1.0 + spec.eps * std::sin(spec.k * x[0])); });
    out.u[0] = g.sample([&](const double* x) { return c * spec.eps * std::sin(spec.k * x[0]); });
  } else if (spec.kind == "density_bump") {
    out.rho = g.sample([&](const double* x) {
      double v = 1.0;
      for (int a = 0; a < d; ++a) v *= std::cos(x[a]);
      return M * (1.0 + spec.eps * v);
    });
  } else if (spec.kind == "shear") {
    out.rho = Field(g.size(), M);
    out.u[0] = g.sample([&](const double* x) { return spec.eps * std::sin(spec.k * x[1]); });
  } else if (spec.kind == "random_bandlimited") {
    std::mt19937_64 rng(spec.seed);
    Field phi = random_bandlimited_field(g, rng, spec.kmax);
    out.rho.resize(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) out.rho[p] = M * (1.0 + 0.5 * spec.eps * phi[p]);
    for (int a = 0; a < d; ++a) {
      Field c = random_bandlimited_field(g, rng, spec.kmax);
      for (double& v : c) v *= spec.eps;
      out.u[static_cast<std::size_t>(a)] = std::move(c);
    }
  } else {
    throw DomainError("unknown initial data kind '" + spec.kind + "'");
  }
  return out;
}

}  // namespace hoffns
