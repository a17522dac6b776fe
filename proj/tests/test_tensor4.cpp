#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "hoffns/tensor4.hpp"
#include "oracles.hpp"

using namespace hoffns;
using Catch::Approx;

namespace {

const std::vector<double> kTimes{0.0, 0.5, 1.0, 1.5, 2.0};

std::vector<Point> points() {
  std::vector<Point> p;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) p.push_back({i * 0.785398, j * 0.785398, 0.0});
  return p;
}

double form(const ViscosityTensor& T, const std::vector<double>& a, const std::vector<double>& b) {
  const int d = T.d;
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) s += T(i, j, k, l) * a[i * d + j] * b[k * d + l];
  return s;
}

}  // namespace

TEST_CASE("zero tensor passes every hypothesis", "[tensor]") {
  auto r = check_hypotheses(zero_tensor(2, 1.0, 0.0), 0.3, kTimes, points());
  CHECK(r.pass());
  CHECK(r.spectrum.lambda_min == 0.0);
  CHECK(r.spectrum.lambda_max == 0.0);
  CHECK(r.h4_ratio == 0.0);
  auto b = coercivity_bounds(zero_tensor(3, 1.0, 0.0));
  CHECK(b.eps_upper == 0.0);
  CHECK(b.eps_lower == 0.0);
}

TEST_CASE("scaled identity spectrum and sup-norm ratio", "[tensor]") {
  auto T = scaled_identity_tensor(2, 1.0, 0.0, 0.1);
  auto r = check_hypotheses(T, 0.2, kTimes, points());
  CHECK(r.spectrum.lambda_min == Approx(0.1));
  CHECK(r.spectrum.lambda_max == Approx(0.1));
  CHECK(r.sup_norm == Approx(0.1));
  CHECK(r.h4_ratio == Approx(0.5));
  CHECK(r.pass());
  auto b = coercivity_bounds(T);
  CHECK(b.eps_upper == Approx(0.1));
  CHECK(b.eps_lower == 0.0);
}

TEST_CASE("random symmetric spectrum matches a Jacobi oracle", "[tensor]") {
  for (int d : {2, 3}) {
    auto T = random_symmetric_tensor(d, 1.0, 0.0, 42, 0.05);
    const int n = d * d;
    std::vector<double> A(T.core.begin(), T.core.end());
    auto ev = oracle::jacobi_eigenvalues(A, n);
    auto sp = core_spectrum(T);
    CHECK(sp.lambda_min == Approx(*std::min_element(ev.begin(), ev.end())).margin(1e-12));
    CHECK(sp.lambda_max == Approx(*std::max_element(ev.begin(), ev.end())).margin(1e-12));
    CHECK(std::max(std::abs(sp.lambda_min), std::abs(sp.lambda_max)) == Approx(0.05).epsilon(1e-12));
  }
}

TEST_CASE("rank-one tensor spectrum", "[tensor]") {
  std::vector<double> v{1.0, 2.0, -0.5, 0.25};
  std::vector<double> table(16);
  for (int p = 0; p < 4; ++p)
    for (int q = 0; q < 4; ++q) table[p * 4 + q] = 0.01 * v[p] * v[q];
  auto sp = coercivity_bounds(table_tensor(2, 1.0, 0.0, table));
  CHECK(sp.lambda_max == Approx(0.01 * (1 + 4 + 0.25 + 0.0625)).epsilon(1e-12));
  CHECK(sp.lambda_min == Approx(0.0).margin(1e-14));
}

TEST_CASE("asymmetric table is reported with its index", "[tensor]") {
  std::vector<double> table(16, 0.0);
  table[1] = 0.02;  // (1,1,1,2) in 1-based indices
  auto T = table_tensor(2, 1.0, 0.0, table);
  CHECK_THROWS_AS(require_symmetric(T), HypothesisError);
  auto r = check_hypotheses(T, 0.1, kTimes, points());
  CHECK_FALSE(r.h1_pass);
  CHECK(r.first_failure() == "H1");
  CHECK(r.symmetry_violation == Approx(0.02));
  CHECK(r.h1_message.find("(1,1,1,2)") != std::string::npos);
  CHECK_THROWS_AS(coercivity_bounds(T), HypothesisError);
}

TEST_CASE("non-coercive tensor fails H2", "[tensor]") {
  auto T = scaled_identity_tensor(2, 1.0, 0.0, -1.0);
  CHECK_THROWS_AS(coercivity_bounds(T), CoercivityError);
  auto r = check_hypotheses(T, 2.0, kTimes, points());
  CHECK_FALSE(r.h2_pass);
  CHECK(r.first_failure() == "H2");
  CHECK(r.coercivity_margin == Approx(0.0).margin(1e-15));
  CHECK_FALSE(r.nonnegative_form);
}

TEST_CASE("oversized amplitude fails H4 with the ratio", "[tensor]") {
  auto r = check_hypotheses(scaled_identity_tensor(2, 1.0, 0.0, 0.2), 0.1, kTimes, points());
  CHECK(r.h2_pass);
  CHECK_FALSE(r.h4_pass);
  CHECK(r.h4_ratio == Approx(2.0));
  // min(mu, 2mu + lambda) picks 2mu + lambda when lambda < -mu
  auto r2 = check_hypotheses(scaled_identity_tensor(2, 1.0, -1.5, 0.04), 0.1, kTimes, points());
  CHECK(r2.h4_ratio == Approx(0.04 / (0.1 * 0.5)));
}

TEST_CASE("modulation enters the worst-case spectrum", "[tensor]") {
  auto T = scaled_identity_tensor(2, 1.0, 0.0, 0.05);
  T.time.kind = TimeModulation::Kind::Sine;
  T.time.omega = 1.0;
  T.time.offset = 0.0;
  auto r = check_hypotheses(T, 0.1, kTimes, points());
  CHECK(r.spectrum.lambda_min == Approx(0.0).margin(1e-15));  // amp(0) = 0
  CHECK(r.spectrum.lambda_max == Approx(0.05 * std::sin(1.5)).epsilon(1e-12));
  CHECK(r.sup_dt == Approx(0.05).epsilon(1e-12));  // |cos(0)| * 0.05
}

TEST_CASE("quadratic-form sandwich on random matrices", "[tensor]") {
  auto T = random_symmetric_tensor(3, 1.0, 0.0, 5, 0.05);
  auto sp = core_spectrum(T);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N01;
  for (int it = 0; it < 10000; ++it) {
    std::vector<double> a(9);
    for (double& v : a) v = N01(rng);
    double n2 = 0.0;
    for (double v : a) n2 += v * v;
    const double q = form(T, a, a);
    REQUIRE(q <= sp.lambda_max * n2 + 1e-12);
    REQUIRE(q >= sp.lambda_min * n2 - 1e-12);
  }
  // bounds are attained at the extreme eigenvectors
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(core_matrix(T));
  std::vector<double> vmin(9), vmax(9);
  for (int q = 0; q < 9; ++q) {
    vmin[q] = es.eigenvectors()(q, 0);
    vmax[q] = es.eigenvectors()(q, 8);
  }
  CHECK(form(T, vmin, vmin) == Approx(sp.lambda_min).margin(1e-10));
  CHECK(form(T, vmax, vmax) == Approx(sp.lambda_max).margin(1e-10));
}

TEST_CASE("symmetric tensors give a symmetric bilinear form", "[tensor]") {
  auto T = random_symmetric_tensor(2, 1.0, 0.0, 3, 0.05);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> a(4), b(4);
    for (int q = 0; q < 4; ++q) {
      a[q] = U(rng);
      b[q] = U(rng);
    }
    CHECK(form(T, a, b) == Approx(form(T, b, a)).margin(1e-15));
  }
}

TEST_CASE("apply on grid fields", "[tensor]") {
  SpectralGrid g(2, 16);
  MatrixField zero = g.zero_matrix();
  auto T = random_symmetric_tensor(2, 1.0, 0.0, 9, 0.05);
  for (const auto& row : apply(g, T, zero, 0.0))
    for (const auto& c : row)
      for (double v : c) CHECK(v == 0.0);

  MatrixField G = g.zero_matrix();
  G[0][1] = g.sample([](const double* x) { return std::sin(x[0]) * std::cos(x[1]); });
  G[1][0] = g.sample([](const double* x) { return std::cos(2 * x[1]); });
  auto out = apply(g, scaled_identity_tensor(2, 1.0, 0.0, 0.3), G, 0.0);
  for (std::size_t p = 0; p < g.size(); ++p) {
    CHECK(out[0][1][p] == Approx(0.3 * G[0][1][p]).margin(1e-15));
    CHECK(out[1][0][p] == Approx(0.3 * G[1][0][p]).margin(1e-15));
    CHECK(out[0][0][p] == 0.0);
  }

  // linearity
  MatrixField H = g.zero_matrix();
  H[1][1] = g.sample([](const double* x) { return std::sin(x[0] + x[1]); });
  MatrixField mix = g.zero_matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < g.size(); ++p) mix[i][j][p] = 2.0 * G[i][j][p] - 0.5 * H[i][j][p];
  auto A = apply(g, T, mix, 0.0), AG = apply(g, T, G, 0.0), AH = apply(g, T, H, 0.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (std::size_t p = 0; p < g.size(); ++p) CHECK(A[i][j][p] == Approx(2.0 * AG[i][j][p] - 0.5 * AH[i][j][p]).margin(1e-15));
}

TEST_CASE("isotropic tensor reproduces the Lame operator", "[tensor]") {
  SpectralGrid g(2, 32);
  const double mt = 0.3, lt = 0.2;
  auto T = isotropic_tensor(2, 1.0, 0.0, mt, lt);
  VectorField u{g.sample([](const double* x) { return std::sin(x[0]) * std::cos(2 * x[1]); }),
                g.sample([](const double* x) { return std::cos(3 * x[0] + x[1]); })};
  auto S = apply(g, T, jacobian(g, u), 0.0);
  Field divu = divergence(g, u);
  auto gd = gradient(g, divu);
  for (int i = 0; i < 2; ++i) {
    Field lhs = divergence(g, S[i]);
    Field lap = laplacian(g, u[i]);
    for (std::size_t p = 0; p < g.size(); ++p)
      CHECK(lhs[p] == Approx(mt * lap[p] + (mt + lt) * gd[i][p]).margin(1e-12));
  }
}

TEST_CASE("tensor derivatives", "[tensor]") {
  SpectralGrid g(2, 32);
  auto T = scaled_identity_tensor(2, 1.0, 0.0, 0.05);
  auto c = tensor_derivatives(g, T, 0.7);
  for (double v : c.dt.scale) CHECK(v == 0.0);
  for (const auto& gr : c.grad)
    for (double v : gr.scale) CHECK(v == 0.0);

  T.time.kind = TimeModulation::Kind::Sine;
  T.time.omega = 1.0;
  T.space.kind = SpaceModulation::Kind::CosineProfile;
  T.space.axis = 0;
  T.space.offset = 2.0;
  auto d0 = tensor_derivatives(g, T, 0.0);
  Field prof = g.sample([](const double* x) { return 2.0 + std::cos(x[0]); });
  for (std::size_t p = 0; p < g.size(); ++p) CHECK(d0.dt.scale[p] == Approx(prof[p]).margin(1e-15));

  auto d1 = tensor_derivatives(g, T, 0.5 * std::numbers::pi);  // amp = 1
  Field dprof = derivative(g, prof, 0);
  for (std::size_t p = 0; p < g.size(); ++p) {
    CHECK(d1.grad[0].scale[p] == Approx(-std::sin(g.coordinate(p, 0))).margin(1e-14));
    CHECK(d1.grad[0].scale[p] == Approx(dprof[p]).margin(1e-12));
    CHECK(d1.grad[1].scale[p] == 0.0);
  }
}

TEST_CASE("shape validation", "[tensor]") {
  auto T = make_tensor(2, 1.0, 0.0);
  T.core.resize(15);
  CHECK_THROWS_AS(validate_shape(T), ShapeError);
  CHECK_THROWS_AS(table_tensor(2, 1.0, 0.0, std::vector<double>(8, 0.0)), ShapeError);
  CHECK_THROWS_AS(check_hypotheses(zero_tensor(2, 1, 0), -1.0, kTimes, points()), DomainError);
}
