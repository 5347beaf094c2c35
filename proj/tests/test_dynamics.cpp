#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "conflab/dynamics.hpp"
#include "conflab/errors.hpp"

using namespace conflab;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
const double kSilver = std::sqrt(2.0) - 1.0;

// Oracle: first return to the union of base cells by stepping one floor at a time.
long brute_return(const BaseSystem& base, const Castle& c, double x, long limit) {
  for (long j = 1; j <= limit; ++j) {
    const double y = base.step(Point(x), j).x();
    for (const auto& cell : c.base_cells)
      if (cell.contains(y)) return j;
  }
  return -1;
}

}  // namespace

TEST_CASE("rotation steps") {
  auto b = BaseSystem::rotation(kGolden);
  CHECK(b.step(Point(0.0), 1).x() == doctest::Approx(0.6180339887));
  CHECK(b.step(Point(0.3), 0).x() == 0.3);
  CHECK(b.step(Point(0.0), 2).x() == doctest::Approx(0.2360679775));
  CHECK(b.step(b.step(Point(0.7), 13), -13).x() == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("rotation is an isometry") {
  auto b = BaseSystem::rotation(kGolden);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Point x(u(rng)), y(u(rng));
    CHECK(b.distance(b.step(x, 7), b.step(y, 7)) == doctest::Approx(b.distance(x, y)).epsilon(1e-9));
  }
}

TEST_CASE("near rational rotation numbers are rejected") {
  CHECK_THROWS_AS(BaseSystem::rotation(0.25), Error);
  CHECK_THROWS_AS(BaseSystem::rotation(355.0 / 113.0 - 3.0), Error);
  CHECK(near_rational(3.0 / 7.0));
  CHECK_FALSE(near_rational(kGolden));
}

TEST_CASE("sample grids are orbits of zero") {
  auto b = BaseSystem::rotation(kGolden);
  auto g1 = sample_grid(b, 1);
  REQUIRE(g1.size() == 1);
  CHECK(g1[0].x() == 0.0);
  auto g3 = sample_grid(b, 3);
  CHECK(g3[1].x() == doctest::Approx(0.6180339887));
  CHECK(g3[2].x() == doctest::Approx(0.2360679775));

  auto t = BaseSystem::torus({kGolden, kSilver});
  auto gt = sample_grid(t, 2);
  CHECK(gt[0][0] == 0.0);
  CHECK(gt[0][1] == 0.0);
  CHECK(gt[1][0] == doctest::Approx(kGolden));
  CHECK(gt[1][1] == doctest::Approx(kSilver));
}

TEST_CASE("convergent denominators of the golden mean are Fibonacci") {
  auto q = convergent_denominators(kGolden, 100);
  std::vector<long> fib{1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144};
  REQUIRE(q.size() <= fib.size());
  for (size_t i = 0; i < q.size(); ++i) CHECK(q[i] == fib[i]);
  CHECK(q.back() > 100);
}

TEST_CASE("castle with N = 1 is one tower") {
  auto c = build_castle(BaseSystem::rotation(kGolden), 1);
  REQUIRE(c.heights.size() == 1);
  CHECK(c.heights[0] == 1);
  CHECK(c.total_length() == doctest::Approx(1.0));
}

TEST_CASE("golden castle with N = 5 has heights 5 and 8") {
  auto c = build_castle(BaseSystem::rotation(kGolden), 5);
  std::set<int> h(c.heights.begin(), c.heights.end());
  CHECK(h == std::set<int>{5, 8});
  // base arc is ‖3α‖ long
  CHECK(c.base_span().len == doctest::Approx(std::abs(3 * kGolden - 2.0)));
}

TEST_CASE("castles tile the circle and match brute-force returns") {
  for (double alpha : {kGolden, kSilver}) {
    auto base = BaseSystem::rotation(alpha);
    for (int n : {3, 5, 13, 34, 100}) {
      auto c = build_castle(base, n);
      std::set<int> h(c.heights.begin(), c.heights.end());
      CHECK(h.size() <= 2);
      CHECK(*h.begin() >= n);
      CHECK(c.total_length() == doctest::Approx(1.0).epsilon(1e-9));

      // floors pairwise disjoint: sort starts, check gaps
      std::vector<Interval> floors;
      for (size_t cell = 0; cell < c.base_cells.size(); ++cell)
        for (int j = 0; j < c.heights[cell]; ++j) floors.push_back(c.floor(static_cast<int>(cell), j));
      std::sort(floors.begin(), floors.end(), [](auto& a, auto& b) { return a.a < b.a; });
      for (size_t i = 0; i + 1 < floors.size(); ++i) CHECK(floors[i].end() <= floors[i + 1].a + 1e-9);
      CHECK(floors.back().end() - 1.0 <= floors.front().a + 1e-9);

      std::mt19937_64 rng(n);
      for (size_t cell = 0; cell < c.base_cells.size(); ++cell) {
        const auto& arc = c.base_cells[cell];
        std::uniform_real_distribution<double> u(0.0, arc.len);
        for (int t = 0; t < 100; ++t) {
          const double x = frac(arc.a + u(rng));
          CHECK(brute_return(base, c, x, 10 * n + 10) == c.heights[cell]);
        }
      }
    }
  }
}

TEST_CASE("castle offsets avoid the sampling orbit") {
  auto base = BaseSystem::rotation(kGolden);
  auto c = build_castle(base, 13);
  auto grid = sample_grid(base, 4096);
  for (const auto& p : grid) CHECK(circle_distance(p.x(), c.offset) > 0.0);
}

TEST_CASE("castle needs a circle base") {
  CHECK_THROWS_AS(build_castle(BaseSystem::torus({kGolden, kSilver}), 5), Error);
  CHECK_THROWS_AS(build_castle(BaseSystem::rotation(kGolden), 0), Error);
}

TEST_CASE("visit counts") {
  auto base = BaseSystem::rotation(kGolden);
  CHECK(visit_count(base, {{0.0, 1.0}}, Point(0.3), 500) == 500);
  CHECK(visit_count(base, {}, Point(0.3), 500) == 0);
  const long c = visit_count(base, {{0.0, 0.1}}, Point(0.0), 1000);
  CHECK(c >= 80);
  CHECK(c <= 120);
  const long big = visit_count(base, {{0.2, 0.37}}, Point(0.0), 100000);
  CHECK(std::abs(big / 1e5 - 0.37) < 5e-3);
}

TEST_CASE("intervals wrap through zero") {
  Interval arc{0.9, 0.2};
  CHECK(arc.contains(0.95));
  CHECK(arc.contains(0.05));
  CHECK_FALSE(arc.contains(0.15));
  CHECK(arc.offset(0.05) == doctest::Approx(0.15));
}
