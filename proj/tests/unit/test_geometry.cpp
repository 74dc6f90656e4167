#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "doctest.h"

#include "fracsob/builtin_meshes.hpp"
#include "fracsob/geometry.hpp"
#include "fracsob/mesh_io.hpp"

using namespace fracsob::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

ManifoldPtr share(SimplicialManifold m) { return std::make_shared<const SimplicialManifold>(std::move(m)); }

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fracsob_test_geometry";
  std::filesystem::create_directories(dir);
  return dir / name;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double boundary_length(const Region& r) {
  double len = 0.0;
  for (const auto& seg : r.boundary_segments()) len += (r.mesh().vertex(seg[0]) - r.mesh().vertex(seg[1])).norm();
  return len;
}

}  // namespace

TEST_CASE("polyline csv of a regular 64-gon keeps counts") {
  const auto path = temp_file("gon64.csv");
  {
    std::ofstream out(path);
    for (int i = 0; i < 64; ++i) out << fmt::format("{:.17g},{:.17g}\n", std::cos(2 * kPi * i / 64), std::sin(2 * kPi * i / 64));
  }
  const auto m = load_mesh(path, MeshFormat::polyline_csv);
  CHECK(m.num_vertices() == 64);
  CHECK(m.num_simplices() == 64);
  CHECK(m.intrinsic_dim() == 1);
  CHECK(m.ambient_dim() == 2);
}

TEST_CASE("icosphere(3) round-trips through OBJ with Euler characteristic 2") {
  const auto path = temp_file("ico3.obj");
  save_obj(icosphere(3), path);
  const auto m = load_mesh(path);
  CHECK(m.euler_characteristic() == 2);
  CHECK(m.num_simplices() == 20 * 64);
}

TEST_CASE("open strip is rejected") {
  const char* strip = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3\nf 2 4 3\n";
  CHECK_THROWS_WITH_AS(parse_obj(strip), doctest::Contains("open"), GeometryError);
}

TEST_CASE("mesh parse errors name the offending line or element") {
  CHECK_THROWS_WITH_AS(parse_obj("v 0 0 0\nv 1 x 0\n"), doctest::Contains("line 2"), GeometryError);
  CHECK_THROWS_WITH_AS(parse_polyline_csv("0,0\n1,0\n"), doctest::Contains("at least 3"), GeometryError);
  const char* degenerate = "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nf 1 2 3\nf 1 2 4\nf 2 3 4\nf 3 1 4\n";
  CHECK_THROWS_WITH_AS(parse_obj(degenerate), doctest::Contains("simplex 0"), GeometryError);
}

TEST_CASE("measure of polygons and their halves") {
  const auto m = share(circle_polygon(64));
  const double perimeter = 64 * 2 * std::sin(kPi / 64);
  CHECK(rel(measure(Region::whole(m)), perimeter) < 1e-14);
  const auto half = make_region(m, ArcSelector{0.0, kPi});
  CHECK(rel(measure(half), perimeter / 2) < 1e-14);
  CHECK(half.boundary_points().size() == 2);
}

TEST_CASE("icosphere area matches direct summation and approaches 4 pi") {
  const auto m = share(icosphere(3));
  double direct = 0.0;
  for (const auto& s : m->simplices()) {
    direct += 0.5 * (m->vertex(s[1]) - m->vertex(s[0])).cross(m->vertex(s[2]) - m->vertex(s[0])).norm();
  }
  CHECK(rel(measure(Region::whole(m)), direct) < 1e-13);
  CHECK(rel(direct, 4 * kPi) < 0.02);
}

TEST_CASE("measure is additive over a region and its complement") {
  const auto m = share(icosphere(2));
  const auto cap = make_region(m, CapSelector{Point(0.3, 0.2, 1.0), 0.8});
  const auto rest = cap.complement();
  CHECK(rel(measure(cap) + measure(rest), cap.mesh().total_measure()) < 1e-12);
  const auto c = share(circle_polygon(64));
  const auto arc = make_region(c, ArcSelector{0.1, 2.3});
  CHECK(rel(measure(arc) + measure(arc.complement()), arc.mesh().total_measure()) < 1e-12);
}

TEST_CASE("euclidean distance: zero, antipodal, symmetric") {
  const auto m = circle_polygon(64);
  CHECK(euclidean_distance(m.vertex(3), m.vertex(3)) == 0.0);
  CHECK(euclidean_distance(m.vertex(0), m.vertex(32)) == doctest::Approx(2.0).epsilon(1e-14));
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 63);
  for (int i = 0; i < 100; ++i) {
    const Point x = m.interpolate(pick(rng), {t(rng), 0, 0}) ;
    const Point y = m.interpolate(pick(rng), {t(rng), 0, 0});
    CHECK(euclidean_distance(x, y) == euclidean_distance(y, x));
  }
}

TEST_CASE("dist_to_set agrees with a 10^4 point sampling oracle") {
  const auto m = share(circle_polygon(64));
  const auto arc = make_region(m, ArcSelector{0.0, kPi / 2});
  const auto target = arc.complement();
  const Point x = Point(std::cos(kPi / 4), std::sin(kPi / 4), 0.0) * std::cos(kPi / 64);
  const auto ids = target.simplex_ids();
  double sampled = std::numeric_limits<double>::infinity();
  const int per = 10000 / static_cast<int>(ids.size()) + 1;
  for (int s : ids) {
    for (int i = 0; i <= per; ++i) {
      const double a = static_cast<double>(i) / per;
      sampled = std::min(sampled, (target.mesh().interpolate(s, {1 - a, a, 0}) - x).norm());
    }
  }
  const double exact = dist_to_set(x, target);
  CHECK(exact <= sampled + 1e-15);
  CHECK(rel(exact, sampled) < 1e-6);
  CHECK(dist_to_set(target.mesh().centroid(ids.front()), target) <= 1e-15);
}

TEST_CASE("nested arcs with symmetric gaps are one gap chord apart") {
  const auto m = share(circle_polygon(64));
  const double gap = 2 * kPi / 16;
  const auto omega = make_region(m, ArcSelector{0.0, kPi});
  const auto& fine = omega.mesh_ptr();
  std::vector<int> inner;
  for (int i = 0; i < fine->num_simplices(); ++i) {
    const Point c = fine->centroid(i);
    const double a = std::atan2(c.y(), c.x());
    if (a > gap && a < kPi - gap) inner.push_back(i);
  }
  const auto k = make_region(fine, SimplexListSelector{inner});
  REQUIRE(k.mesh_ptr() == fine);
  const Region outside = omega.complement();
  const double chord = 2 * std::sin(gap / 2);
  CHECK(dist_between(outside, k) == doctest::Approx(chord).epsilon(1e-12));
}

TEST_CASE("dilation scales vertices, measures and distances exactly") {
  const auto c = circle_polygon(64);
  const auto same = dilate(c, 1.0);
  for (int i = 0; i < c.num_vertices(); ++i) CHECK(same.vertex(i) == c.vertex(i));
  CHECK(dilate(c, 2.0).total_measure() == 2.0 * c.total_measure());
  const auto ico = icosphere(2);
  CHECK(rel(dilate(ico, 2.0).total_measure(), 4.0 * ico.total_measure()) < 1e-14);
  const auto big = dilate(ico, 10.0);
  CHECK(rel(euclidean_distance(big.vertex(0), big.vertex(5)), 10.0 * euclidean_distance(ico.vertex(0), ico.vertex(5))) <
        1e-15);
  for (double lambda : {0.5, 2.0, 10.0}) {
    const auto m = share(icosphere(1));
    const auto cap = make_region(m, CapSelector{Point::UnitZ(), 0.7});
    CHECK(rel(measure(dilate(cap, lambda)), lambda * lambda * measure(cap)) < 1e-12);
  }
  CHECK_THROWS_AS(dilate(c, 0.0), GeometryError);
  CHECK_THROWS_AS(dilate(c, -1.0), GeometryError);
}

TEST_CASE("region selector errors") {
  const auto m = share(circle_polygon(64));
  CHECK_THROWS_WITH_AS(make_region(m, ArcSelector{1.0, 1.0}), doctest::Contains("empty"), GeometryError);
  CHECK_THROWS_WITH_AS(make_region(m, ArcSelector{0.0, 2 * kPi}), doctest::Contains("whole"), GeometryError);
  CHECK_THROWS_WITH_AS(make_region(m, SimplexListSelector{{0, 1, 10, 11}}), doctest::Contains("disconnected"),
                       GeometryError);
  const auto s = share(icosphere(1));
  CHECK_THROWS_AS(make_region(s, CapSelector{Point::UnitZ(), 0.0}), GeometryError);
}

TEST_CASE("cap boundary length tends to 2 pi sin r under refinement") {
  const double r = 0.9;
  const double target = 2 * kPi * std::sin(r);
  double previous = std::numeric_limits<double>::infinity();
  for (int level : {2, 3, 4}) {
    const auto cap = make_region(share(icosphere(level)), CapSelector{Point::UnitZ(), r});
    CHECK(cap.boundary_components() == 1);
    const double err = std::abs(boundary_length(cap) - target);
    CHECK(err < previous);
    previous = err;
  }
  CHECK(previous / target < 0.01);
}

TEST_CASE("builtin meshes") {
  const auto c = circle_polygon(64);
  CHECK(c.num_simplices() == 64);
  CHECK(rel(c.total_measure(), 64 * 2 * std::sin(kPi / 64)) < 1e-14);
  for (int n : {1, 3, 8}) CHECK(square_boundary(n).total_measure() == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(cube_surface(2).total_measure() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(builtin_mesh("icosphere", 1).num_simplices() == 80);
  CHECK_THROWS_WITH_AS(builtin_mesh("torus", 3), doctest::Contains("circle-polygon"), GeometryError);
  CHECK_THROWS_AS(circle_polygon(4), GeometryError);
  CHECK_THROWS_AS(graded_circle(0), GeometryError);
  const auto g = graded_circle(12);
  CHECK(g.euler_characteristic() == 0);
  const auto arc = make_region(share(g), ArcSelector{0.0, 2 * kPi * std::pow(2.0, -12)});
  CHECK(arc.num_simplices() >= 32);
}

TEST_CASE("refining a region with a foreign refinement is rejected") {
  const auto m = share(circle_polygon(64));
  const auto arc = make_region(m, ArcSelector{0.05, 1.0});
  const auto wrong = refine(*m);
  if (arc.mesh().num_simplices() != m->num_simplices()) {
    CHECK_THROWS_WITH_AS(refine(arc, wrong), doctest::Contains("refinement"), GeometryError);
  }
  const auto ok = refine(arc.mesh());
  CHECK(rel(measure(refine(arc, ok)), measure(arc)) < 1e-14);
}
