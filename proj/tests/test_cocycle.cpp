#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include "conflab/analysis.hpp"
#include "conflab/errors.hpp"
#include "conflab/kernels.hpp"
#include "conflab/subspace.hpp"
#include "conflab/verify.hpp"

using namespace conflab;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
const double kLn2 = std::numbers::ln2;

BaseSystem golden() { return BaseSystem::rotation(kGolden); }

Cocycle constant(const Matrix& m) { return Cocycle(golden(), std::make_shared<ConstantGenerator>(m)); }

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<int>(v.size()), static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

// Rotation by 2πx: conformal at every point.
class SpinGenerator : public Generator {
 public:
  int dim() const override { return 2; }
  Matrix eval(const Point& x) const override { return rotation2(2 * std::numbers::pi * x.x()); }
  json to_json() const override { return {{"type", "spin"}}; }
};

Cocycle spin() { return Cocycle(golden(), std::make_shared<SpinGenerator>()); }

Matrix block_example() { return block_diag({4.0 * rotation2(0.7), rotation2(1.3)}); }

}  // namespace

TEST_CASE("product of length zero is the identity") {
  auto p = constant(diag({2.0, 0.5})).product(Point(0.1), 0);
  CHECK((p.dense() - Matrix::Identity(2, 2)).norm() < 1e-15);
  CHECK(p.log_value(0) == 0.0);
}

TEST_CASE("constant cocycle products are powers") {
  Rng rng(6);
  Matrix m = random_matrix(rng, 3);
  auto p = constant(m).product(Point(0.0), 5);
  Matrix m5 = m * m * m * m * m;
  CHECK((p.dense() - m5).norm() < 1e-10 * m5.norm());
}

TEST_CASE("rotation products compose additively") {
  auto a = spin();
  const double x = 0.137;
  auto p = a.product(Point(x), 3);
  const double angle = 2 * std::numbers::pi * (x + frac(x + kGolden) + frac(x + 2 * kGolden));
  CHECK((p.dense() - rotation2(angle)).norm() < 1e-12);
  CHECK(p.singular_data().zeta < 1e-12);
}

TEST_CASE("cocycle property holds on random segments") {
  Cocycle a(golden(), std::make_shared<SchrodingerGenerator>(5.0));
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 50);
  for (int t = 0; t < 50; ++t) {
    const Point x(u(rng));
    const int m = len(rng), n = len(rng);
    auto whole = a.product(x, m + n);
    auto first = a.product(x, n);
    auto second = a.product(golden().step(x, n), m);
    // Log-aware comparison: normalize both sides by their top singular value.
    const double s1 = first.log_value(0), s2 = second.log_value(0), sw = whole.log_value(0);
    Matrix joined = second.dense(s2) * first.dense(s1);
    const double ratio = std::exp(s1 + s2 - sw);
    CHECK((whole.dense(sw) - ratio * joined).norm() < 1e-8);
    const auto dw = whole.singular_data(), d1 = first.singular_data(), d2 = second.singular_data();
    CHECK(dw.sigma(2) == doctest::Approx(d1.sigma(2) + d2.sigma(2)).epsilon(1e-9));
    CHECK(dw.sigma(1) <= d1.sigma(1) + d2.sigma(1) + 1e-9);
  }
}

TEST_CASE("generators evaluate deterministically") {
  Cocycle a(golden(), std::make_shared<RotationScaleGenerator>(1.2));
  const Point x(0.4242);
  Matrix m1 = a(x), m2 = a(x);
  CHECK((m1 - m2).norm() == 0.0);
  CHECK(a.bound() == doctest::Approx(1.2));
  CHECK(a.min_mininorm() == doctest::Approx(1.0 / 1.2));
}

TEST_CASE("schrodinger generator") {
  SchrodingerGenerator g(5.0);
  Matrix m = g.eval(Point(0.25));
  CHECK(m(0, 0) == doctest::Approx(5.0));
  CHECK(m(0, 1) == -1.0);
  CHECK(m(1, 0) == 1.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(m.determinant() == doctest::Approx(1.0));
}

TEST_CASE("table generator uses the nearest sample") {
  std::vector<Matrix> samples{diag({1.0, 1.0}), diag({2.0, 1.0}), diag({3.0, 1.0}), diag({4.0, 1.0})};
  TableGenerator t(samples);
  CHECK(t.eval(Point(0.01))(0, 0) == 1.0);
  CHECK(t.eval(Point(0.26))(0, 0) == 2.0);
  CHECK(t.eval(Point(0.74))(0, 0) == 4.0);
  CHECK(t.eval(Point(0.99))(0, 0) == 1.0);
}

TEST_CASE("estimates for the constant hyperbolic cocycle") {
  auto a = constant(diag({2.0, 0.5}));
  CHECK(estimate_Z(a, 1000, 64) == doctest::Approx(kLn2).epsilon(1e-3));
  CHECK(estimate_K(a, 1000, 64) == doctest::Approx(2 * kLn2).epsilon(1e-3));
  auto b = constant(diag({std::exp(3.0), std::exp(1.0), 1.0}));
  CHECK(std::abs(estimate_Z(b, 100, 16) - 3.0) < 1e-6);
  CHECK(std::abs(estimate_K(b, 100, 16) - 3.0) < 1e-6);
}

TEST_CASE("rotation-valued cocycles have zero distortion rates") {
  auto a = spin();
  for (int n : {1, 10, 200}) {
    CHECK(estimate_Z(a, n, 256) < 1e-9);
    CHECK(estimate_K(a, n, 256) < 1e-9);
  }
}

TEST_CASE("lyapunov spectra") {
  auto a = constant(diag({2.0, 0.5}));
  auto l = lyapunov_spectrum(a, Point(0.3), 10000);
  CHECK(std::abs(l[0] - kLn2) < 1e-6);
  CHECK(std::abs(l[1] + kLn2) < 1e-6);
  auto r = lyapunov_spectrum(spin(), Point(0.3), 1000);
  CHECK(std::abs(r[0]) < 1e-9);
  CHECK(std::abs(r[1]) < 1e-9);
}

TEST_CASE("schrodinger exponent matches a brute-force vector slope") {
  Cocycle a(golden(), std::make_shared<SchrodingerGenerator>(5.0));
  const int n = 4000;
  const Point x(0.21);
  auto l = lyapunov_spectrum(a, x, n);
  CHECK(l[0] > 0.0);
  CHECK(l[0] == doctest::Approx(-l[1]).epsilon(1e-9));
  // Oracle: grow a random vector step by step, renormalizing.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vector v(2);
  v << g(rng), g(rng);
  double log_len = 0.0;
  Point y = x;
  for (int j = 0; j < n; ++j) {
    v = a(y) * v;
    const double s = v.norm();
    log_len += std::log(s);
    v /= s;
    y = a.base().step(y, 1);
  }
  CHECK(std::abs(log_len / n - l[0]) < 1e-3);
}

TEST_CASE("serial and parallel sweeps agree bit for bit") {
  Cocycle a(golden(), std::make_shared<RotationScaleGenerator>(1.2));
  auto points = sample_grid(a.base(), 300);
  const std::vector<int> horizons{1, 7, 64, 200};
  auto f = [](std::span<const double> lam, std::span<double> out) {
    out[0] = zeta_from_logs(lam);
    out[1] = lam.front() - lam.back();
  };
  auto s = kernels::serial::sweep(a, points, horizons, 2, f);
  auto p = kernels::parallel::sweep(a, points, horizons, 2, f);
  CHECK(s.max == p.max);
  CHECK(s.min == p.min);
  CHECK(s.mean == p.mean);
  auto ls = kernels::serial::lambdas_at(a, points, 50);
  auto lp = kernels::parallel::lambdas_at(a, points, 50);
  CHECK(ls == lp);
}

TEST_CASE("distortion series is reported per horizon") {
  auto a = constant(diag({2.0, 0.5}));
  auto s = distortion_series(a, Functional::sigma, {10, 20}, 32, 1);
  REQUIRE(s.sup_rate.size() == 2);
  CHECK(s.sup_rate[0] == doctest::Approx(kLn2));
  CHECK(s.final_rate() == doctest::Approx(kLn2));
}

TEST_CASE("domination detection") {
  auto r = detect_domination(constant(diag({2.0, 1.0})), 500, 64);
  REQUIRE(r.indices == std::vector<int>{1});
  CHECK(r.fits[0].tau_estimate == doctest::Approx(2.0).epsilon(0.05));
  CHECK(r.fits[0].tau_estimate > 1.0);

  CHECK(detect_domination(spin(), 500, 64).indices.empty());

  auto b = detect_domination(constant(block_example()), 500, 64);
  CHECK(b.indices == std::vector<int>{2});
  CHECK(b.fits[1].tau_estimate == doctest::Approx(4.0).epsilon(0.05));

  auto full = detect_domination(constant(diag({4.0, 2.0, 1.0})), 100, 16);
  CHECK(full.indices == std::vector<int>{1, 2});
  CHECK_THROWS_AS(detect_domination(spin(), 5, 16), Error);
}

TEST_CASE("finest splitting of diagonal and block cocycles") {
  auto a = constant(diag({4.0, 2.0, 1.0}));
  auto rep = detect_domination(a, 100, 16);
  auto f = finest_splitting(a, rep, 200, 32);
  REQUIRE(f.dims == std::vector<int>{1, 1, 1});
  for (int b = 0; b < 3; ++b) {
    Matrix axis = Matrix::Zero(3, 1);
    axis(b, 0) = 1.0;
    for (const auto& at : f.bases) CHECK(max_principal_angle(at[b], axis) < 1e-6);
  }
  CHECK(f.equivariance_defect < kEquivarianceTol);

  auto c = constant(block_example());
  auto fb = finest_splitting(c, detect_domination(c, 200, 16), 200, 32);
  REQUIRE(fb.dims == std::vector<int>{2, 2});
  Matrix p12 = Matrix::Zero(4, 2), p34 = Matrix::Zero(4, 2);
  p12(0, 0) = p12(1, 1) = 1.0;
  p34(2, 0) = p34(3, 1) = 1.0;
  CHECK(max_principal_angle(fb.bases[0][0], p12) < 1e-6);
  CHECK(max_principal_angle(fb.bases[0][1], p34) < 1e-6);
}

TEST_CASE("trivial reports give one bundle") {
  auto a = spin();
  auto f = finest_splitting(a, detect_domination(a, 50, 16), 50, 16);
  CHECK(f.trivial());
  CHECK(f.dims == std::vector<int>{2});
  CHECK(estimate_Z_fine(a, f, 10) < 1e-9);
}

TEST_CASE("fine estimates") {
  auto a = constant(diag({4.0, 2.0, 1.0}));
  auto f = finest_splitting(a, detect_domination(a, 100, 16), 200, 64);
  CHECK(estimate_Z_fine(a, f, 50) < 1e-9);
  CHECK(estimate_K_fine(a, f, 50) < 1e-9);

  auto c = constant(block_example());
  auto fb = finest_splitting(c, detect_domination(c, 200, 16), 200, 300);
  CHECK(estimate_Z_fine(c, fb, 200) < 1e-9);
  // Two blocks at log rates ln4 and 0: ζ rate is 2·ln4.
  CHECK(estimate_Z(c, 200, 16) == doctest::Approx(2 * std::log(4.0)).epsilon(1e-9));
  CHECK_THROWS_AS(estimate_Z_fine(c, fb, 300), Error);
}

TEST_CASE("trivial splitting reproduces the plain estimate") {
  Cocycle a(golden(), std::make_shared<RotationScaleGenerator>(1.2));
  auto rep = detect_domination(a, 100, 256);
  REQUIRE(rep.indices.empty());
  auto f = finest_splitting(a, rep, 100, 300);
  const int n = 100;
  // The fine estimate scans starts along the frame orbit, which is the grid prefix.
  CHECK(estimate_Z_fine(a, f, n) == doctest::Approx(estimate_Z(a, n, 300 - n)).epsilon(1e-9));
}

TEST_CASE("continuation of an unchanged cocycle is exact") {
  auto a = constant(diag({4.0, 2.0, 1.0}));
  auto f = finest_splitting(a, detect_domination(a, 100, 16), 100, 16);
  auto g = continuation_match(f, a, 100);
  for (size_t p = 0; p < f.bases.size(); ++p)
    for (int b = 0; b < 3; ++b) CHECK(max_principal_angle(f.bases[p][b], g.bases[p][b]) < 1e-9);
}

TEST_CASE("continuation under a small perturbation") {
  auto a = constant(diag({4.0, 2.0, 1.0}));
  Matrix m = diag({4.0, 2.0, 1.0});
  m(0, 1) += 1e-3;
  m(2, 0) -= 1e-3;
  auto f = finest_splitting(a, detect_domination(a, 100, 16), 100, 16);
  auto g = continuation_match(f, constant(m), 100);
  CHECK(g.dims == f.dims);
  for (int b = 0; b < 3; ++b) CHECK(max_principal_angle(f.bases[0][b], g.bases[0][b]) < 1e-2);
}

TEST_CASE("continuation fails when the splitting changes") {
  auto a = constant(diag({4.0, 2.0, 1.0}));
  auto f = finest_splitting(a, detect_domination(a, 100, 16), 100, 16);
  try {
    continuation_match(f, constant(diag({4.0, 4.0, 1.0})), 100);
    FAIL("expected a continuation failure");
  } catch (const Error& e) {
    CHECK(e.reason() == Reason::continuation_failure);
  }
}

TEST_CASE("semi-uniform averages") {
  auto c = susaet_check(constant(diag({2.0, 0.5})), Functional::kappa, 100, 64);
  CHECK(c.sup_side == c.avg_side);
  auto r = susaet_check(spin(), Functional::zeta, 100, 64);
  CHECK(r.sup_side < 1e-9);
  CHECK(r.avg_side < 1e-9);
}

TEST_CASE("estimates track the lyapunov exponents") {
  Cocycle a(golden(), std::make_shared<SchrodingerGenerator>(5.0));
  auto l = lyapunov_spectrum(a, Point(0.0), 10000);
  CHECK(std::abs(estimate_K(a, 10000, 256) - (l[0] - l[1])) < 5e-2);
  CHECK(std::abs(estimate_Z(a, 10000, 256) - zeta_from_logs(l)) < 5e-2);
}
