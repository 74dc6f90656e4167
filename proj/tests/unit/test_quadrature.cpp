#include <cmath>
#include <random>

#include "doctest.h"

#include "fracsob/quadrature.hpp"

using namespace fracsob::quadrature;

TEST_CASE("quadrature spec validation") {
  QuadratureSpec q;
  CHECK_NOTHROW(q.validate());
  q.far_order = 1;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = {};
  q.near_refinement = 1;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = {};
  q.separation_ratio = 0.5;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = {};
  q.workers = 0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("Gauss-Legendre rules integrate polynomials of degree 2n - 1 exactly") {
  for (int n = 1; n <= 7; ++n) {
    const auto& r = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double sum = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) sum += r.weights[i] * std::pow(r.nodes[i], d);
      CHECK(sum == doctest::Approx(1.0 / (d + 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("triangle rules integrate monomials exactly") {
  // int_T x^a y^b over the unit triangle = a! b! / (a + b + 2)!, normalized by area 1/2.
  const auto& r = simplex_rule(2, 3);
  double w = 0.0;
  double xy = 0.0;
  double x2 = 0.0;
  for (std::size_t i = 0; i < r.bary.size(); ++i) {
    const double x = r.bary[i][1];
    const double y = r.bary[i][2];
    w += r.weights[i];
    xy += r.weights[i] * x * y;
    x2 += r.weights[i] * x * x;
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(xy == doctest::Approx(2.0 / 24.0).epsilon(1e-14));
  CHECK(x2 == doctest::Approx(2.0 * 2.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("deterministic_sum is bit-identical for every worker count") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = d(rng) * std::pow(10.0, 8 * d(rng));
  const auto row = [&](int i) { return RowSum{v[static_cast<std::size_t>(i)], std::abs(v[static_cast<std::size_t>(i)])}; };
  const auto ref = deterministic_sum(1000, row, 1);
  for (int w : {2, 3, 8, 16}) {
    const auto got = deterministic_sum(1000, row, w);
    CHECK(got.value == ref.value);
    CHECK(got.error == ref.error);
  }
  CHECK(pairwise_sum(v) == ref.value);
}

TEST_CASE("subdivision preserves volume") {
  const Cell tri = make_cell(2, {Point(0, 0, 0), Point(1, 0, 0), Point(0, 2, 0)}, {0, 1, 2});
  std::array<Cell, 4> kids;
  REQUIRE(subdivide(tri, kids) == 4);
  double v = 0.0;
  for (const auto& c : kids) v += c.volume;
  CHECK(v == doctest::Approx(tri.volume).epsilon(1e-15));
  const Cell seg = make_cell(1, {Point(0, 0, 0), Point(3, 4, 0), Point()}, {0, 1, 0});
  REQUIRE(subdivide(seg, kids) == 2);
  CHECK(kids[0].volume + kids[1].volume == doctest::Approx(5.0).epsilon(1e-15));
}
