#include "conflab/verify.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "conflab/analysis.hpp"
#include "conflab/dynamics.hpp"
#include "conflab/errors.hpp"
#include "conflab/patch.hpp"
#include "conflab/perturb.hpp"
#include "conflab/subspace.hpp"

namespace conflab {

Matrix random_matrix(Rng& rng, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  while (true) {
    Matrix m(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) m(r, c) = g(rng);
    Eigen::JacobiSVD<Matrix> svd(m);
    if (svd.singularValues()(d - 1) > 1e-3) return m;
  }
}

Matrix random_orthogonal(Rng& rng, int d) { return orthonormalize(random_matrix(rng, d)); }

namespace {

using json = nlohmann::json;

struct Suite {
  std::string name;
  std::function<json(Rng&)> body;  // returns {"pass": bool, ...}
};

json identity_suite(Rng& rng) {
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 200; ++s) {
      const auto sd = singular_data(random_matrix(rng, d));
      double sum = 0.0;
      for (int i = 1; i < d; ++i) sum += double(i) * (d - i) * sd.gamma(i);
      worst = std::max(worst, std::abs(sd.zeta - sum));
    }
  return {{"pass", worst <= 1e-10}, {"max_residual", worst}};
}

json gap_bound_suite(Rng& rng) {
  int violations = 0;
  double worst_gamma_excess = 0.0;
  for (int d = 2; d <= 6; ++d) {
    const double b = dimension_constants(d).b;
    for (int s = 0; s < 200; ++s) {
      const auto sd = singular_data(random_matrix(rng, d));
      if (max_half_gap(sd).value < b * sd.zeta - 1e-12) ++violations;
      for (int i = 1; i < d; ++i) worst_gamma_excess = std::max(worst_gamma_excess, sd.gamma(i) - sd.zeta);
    }
  }
  return {{"pass", violations == 0 && worst_gamma_excess <= 1e-12},
          {"violations", violations},
          {"max_gamma_minus_zeta", worst_gamma_excess}};
}

json exterior_suite(Rng& rng) {
  double worst = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 40; ++s) {
      const Matrix m = random_matrix(rng, d);
      const auto sd = singular_data(m);
      for (int i = 1; i <= d; ++i) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(exterior_power(m, i));
        const double want = std::exp(sd.sigma(i));
        worst = std::max(worst, std::abs(svd.singularValues()(0) - want) / want);
      }
    }
  return {{"pass", worst <= 1e-8}, {"max_relative_error", worst}};
}

json subadditivity_suite(Rng& rng) {
  double worst = -INFINITY, worst_det = 0.0;
  for (int d = 2; d <= 6; ++d)
    for (int s = 0; s < 200; ++s) {
      const Matrix a = random_matrix(rng, d), b = random_matrix(rng, d);
      const auto sa = singular_data(a), sb = singular_data(b), sab = singular_data(Matrix(a * b));
      for (int i = 1; i < d; ++i) worst = std::max(worst, sab.sigma(i) - sa.sigma(i) - sb.sigma(i));
      worst = std::max({worst, sab.zeta - sa.zeta - sb.zeta, sab.kappa - sa.kappa - sb.kappa});
      worst_det = std::max(worst_det, std::abs(sab.sigma(d) - sa.sigma(d) - sb.sigma(d)));
    }
  return {{"pass", worst <= 1e-9 && worst_det <= 1e-9}, {"max_excess", worst}, {"max_det_defect", worst_det}};
}

json distortion_bounds_suite(Rng& rng) {
  bool ok = true;
  for (int d = 2; d <= 6; ++d) {
    const double b = dimension_constants(d).b;
    for (int s = 0; s < 100; ++s) {
      const auto sd = singular_data(random_matrix(rng, d));
      ok = ok && sd.zeta <= d * d * sd.kappa + 1e-12 && sd.kappa <= 4.0 * sd.zeta / b + 1e-12;
    }
  }
  return {{"pass", ok}};
}

json weight_suite(Rng& rng) {
  std::normal_distribution<double> g(0.0, 2.0);
  double worst = 0.0;
  for (int d = 3; d <= 6; ++d)
    for (int s = 0; s < 100; ++s) {
      std::vector<double> l(d);
      double mean = 0.0;
      for (auto& x : l) mean += (x = g(rng)) / d;
      for (auto& x : l) x -= mean;
      const auto sd = singular_data_from_logs(l);
      for (int i0 = 1; i0 < d; ++i0) {
        const auto u = zeta_gap_weights(d, i0);
        double rhs = 0.0;
        for (int i = 1; i < d; ++i) rhs += u[i - 1] * sd.sigma(i);
        worst = std::max(worst, std::abs(sd.zeta + sd.gamma(i0) - rhs));
      }
    }
  return {{"pass", worst <= 1e-10}, {"max_residual", worst}};
}

json castle_suite(Rng& rng) {
  const auto base = BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  double tiling = 0.0;
  for (int n : {5, 13}) {
    const auto c = build_castle(base, n);
    tiling = std::max(tiling, std::abs(c.total_length() - 1.0));
    for (size_t cell = 0; cell < c.base_cells.size(); ++cell)
      for (int s = 0; s < 30; ++s) {
        const double x = frac(c.base_cells[cell].a + u(rng) * c.base_cells[cell].len);
        if (first_return(base, c.base_span(), x, 10 * n + 10) != c.heights[cell]) ++mismatches;
      }
  }
  return {{"pass", mismatches == 0 && tiling <= 1e-9}, {"mismatches", mismatches}, {"tiling_error", tiling}};
}

json equidistribution_suite(Rng&) {
  const auto base = BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0);
  const long n = 100000;
  const double freq = double(visit_count(base, {{0.0, 0.1}}, base.origin(), n)) / n;
  return {{"pass", std::abs(freq - 0.1) <= 5e-3}, {"frequency", freq}};
}

json cocycle_property_suite(Rng& rng) {
  const Cocycle a(BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0), std::make_shared<SchrodingerGenerator>(3.0), 256);
  std::uniform_int_distribution<int> len(1, 50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Point x(u(rng));
    const int m = len(rng), n = len(rng);
    const auto whole = a.product(x, m + n).dense();
    const Matrix split = a.product(a.base().step(x, n), m).dense() * a.product(x, n).dense();
    worst = std::max(worst, (whole - split).norm() / whole.norm());
  }
  return {{"pass", worst <= 1e-8}, {"max_relative_error", worst}};
}

json chain_suite(Rng& rng) {
  int failures = 0, runs = 0;
  for (int s = 0; s < 20; ++s) {
    std::vector<Matrix> maps;
    for (int j = 0; j < 30; ++j) maps.push_back(Matrix::Identity(2, 2) + 0.1 * random_matrix(rng, 2));
    const Vector v = random_matrix(rng, 2).col(0), w = random_matrix(rng, 2).col(0);
    if (chain_log_ratio(maps, v, w) <= std::log(0.5)) continue;
    ++runs;
    try {
      const auto u = chain_vectors(maps, v, w, 0.2);
      Vector target = w;
      for (const auto& m : maps) target = m * target;
      bool ok = (u.front() - v).norm() == 0.0 && (u.back() - target).norm() == 0.0;
      for (size_t j = 0; j < maps.size(); ++j) ok = ok && vector_angle(u[j + 1], maps[j] * u[j]) < 0.2;
      if (!ok) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  return {{"pass", failures == 0}, {"runs", runs}, {"failures", failures}};
}

json closed_form_suite(Rng&) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 2.0;
  m(1, 1) = 0.5;
  const Cocycle a(BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0), std::make_shared<ConstantGenerator>(m), 16);
  const double z = estimate_Z(a, 1000, 16), k = estimate_K(a, 1000, 16);
  const double ln2 = std::numbers::ln2;
  return {{"pass", std::abs(z - ln2) <= 1e-3 && std::abs(k - 2 * ln2) <= 1e-3}, {"Z", z}, {"K", k}};
}

json partition_suite(Rng&) {
  const auto base = BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0);
  const Cocycle a(base, std::make_shared<RotationScaleGenerator>(1.2), 64);
  const auto castle = build_castle(base, 8);
  std::vector<Bump> bumps;
  for (size_t c = 0; c < castle.base_cells.size(); ++c) {
    const auto& cell = castle.base_cells[c];
    std::vector<Matrix> win(castle.heights[c], Matrix::Identity(2, 2));
    bumps.push_back({cell, {frac(cell.a + 0.05 * cell.len), 0.9 * cell.len}, win});
  }
  const BlendedGenerator b(a, bumps);
  double worst = 0.0;
  bool range_ok = true;
  for (int s = 0; s < 100000; ++s) {
    const auto w = b.weights((s + 0.5) / 100000.0);
    worst = std::max(worst, std::abs(w.psi + w.phi - 1.0));
    range_ok = range_ok && w.phi >= 0.0 && w.phi <= 1.0 && w.psi >= 0.0 && w.psi <= 1.0;
  }
  return {{"pass", worst <= 1e-12 && range_ok}, {"max_defect", worst}};
}

}  // namespace

nlohmann::json run_verify(std::uint64_t seed) {
  const std::vector<Suite> suites = {
      {"identity", identity_suite},
      {"gap_bound", gap_bound_suite},
      {"exterior_norm", exterior_suite},
      {"subadditivity", subadditivity_suite},
      {"distortion_bounds", distortion_bounds_suite},
      {"weight_identity", weight_suite},
      {"castle", castle_suite},
      {"equidistribution", equidistribution_suite},
      {"cocycle_property", cocycle_property_suite},
      {"chain_postconditions", chain_suite},
      {"constant_closed_forms", closed_form_suite},
      {"partition_of_unity", partition_suite},
  };
  json out = {{"seed", seed}, {"suites", json::array()}};
  bool all = true;
  for (const auto& s : suites) {
    Rng rng(seed);
    json r;
    try {
      r = s.body(rng);
    } catch (const Error& e) {
      r = {{"pass", false}, {"error", std::string(e.code())}, {"message", e.what()}};
    }
    r["name"] = s.name;
    all = all && r["pass"].get<bool>();
    out["suites"].push_back(r);
  }
  out["pass"] = all;
  return out;
}

}  // namespace conflab
