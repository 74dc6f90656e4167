#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"

#include "fracsob/builtin_meshes.hpp"
#include "fracsob/sobolev.hpp"

using namespace fracsob;
using geometry::ManifoldPtr;
using geometry::Point;
using geometry::Region;
using sobolev::ScalarField;
using sobolev::SobolevParams;

namespace {

constexpr double kPi = std::numbers::pi;

ManifoldPtr share(geometry::SimplicialManifold m) {
  return std::make_shared<const geometry::SimplicialManifold>(std::move(m));
}

ManifoldPtr polygon64() {
  static const auto m = share(geometry::circle_polygon(64));
  return m;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

ScalarField random_field(const Region& r, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(r.mesh().num_vertices()));
  for (auto& x : v) x = d(rng);
  return ScalarField::on_region(r, v);
}

ScalarField cos_theta(const Region& r) {
  return ScalarField::sample(r, [](const Point& x) { return x.x() / x.norm(); });
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(SobolevParams::make(0.0, 2, 1), sobolev::SobolevError);
  CHECK_THROWS_AS(SobolevParams::make(1.0, 2, 1), sobolev::SobolevError);
  CHECK_THROWS_AS(SobolevParams::make(0.5, 0.5, 1), sobolev::SobolevError);
  CHECK(SobolevParams::make(0.5, 2, 2).kernel_exponent() == 3.0);
}

TEST_CASE("lp norm of constants and zero") {
  const auto arc = geometry::make_region(polygon64(), geometry::ArcSelector{0.2, 2.0});
  for (double c : {-3.0, 0.5, 2.0}) {
    for (double p : {1.0, 2.0, 4.0}) {
      CHECK(rel(sobolev::lp_norm(ScalarField::constant(arc, c), arc, p),
                std::abs(c) * std::pow(geometry::measure(arc), 1.0 / p)) < 1e-13);
    }
  }
  CHECK(sobolev::lp_norm(ScalarField::constant(arc, 0.0), arc, 2.0) == 0.0);
}

TEST_CASE("lp norm of a hat function matches a 10^5-subinterval midpoint rule") {
  const auto whole = Region::whole(polygon64());
  std::vector<double> v(64, 0.0);
  v[0] = 1.0;
  const auto hat = ScalarField::on_manifold(polygon64(), v);
  double oracle = 0.0;
  const int n = 100000;
  for (int s = 0; s < 64; ++s) {
    const auto& sx = polygon64()->simplex(s);
    const double len = polygon64()->volume(s);
    for (int i = 0; i < n; ++i) {
      const double t = (i + 0.5) / n;
      const double u = (1 - t) * v[static_cast<std::size_t>(sx[0])] + t * v[static_cast<std::size_t>(sx[1])];
      oracle += u * u * len / n;
    }
  }
  CHECK(rel(sobolev::lp_norm_power(hat, whole, 2.0), oracle) < 1e-6);
}

TEST_CASE("seminorm of constants is exactly zero") {
  const auto ico = share(geometry::icosphere(1));
  for (const auto& r : {Region::whole(polygon64()), geometry::make_region(polygon64(), geometry::ArcSelector{0, 1}),
                        Region::whole(ico), geometry::make_region(ico, geometry::CapSelector{Point::UnitZ(), 1.0})}) {
    for (double c : {0.0, 1.0, -7.5}) {
      const int k = r.mesh().intrinsic_dim();
      CHECK(sobolev::gagliardo_seminorm(ScalarField::constant(r, c), r, SobolevParams::make(0.5, 2, k)).value == 0.0);
    }
  }
}

TEST_CASE("cos theta on the 64-gon agrees with the 2048-cell midpoint oracle within 1%") {
  const auto whole = Region::whole(polygon64());
  const auto u = cos_theta(whole);
  const auto prm = SobolevParams::make(0.5, 2, 1);
  const double q = sobolev::gagliardo_seminorm(u, whole, prm).value;
  CHECK(rel(q, sobolev::oracle_seminorm(u, whole, prm, 2048)) < 0.01);
}

TEST_CASE("oracle: constants vanish and estimates converge under resolution doubling") {
  const auto whole = Region::whole(polygon64());
  const auto prm = SobolevParams::make(0.75, 2, 1);
  CHECK(sobolev::oracle_seminorm(ScalarField::constant(whole, 2.0), whole, prm, 256) == 0.0);
  CHECK_THROWS_AS(sobolev::oracle_seminorm(ScalarField::constant(whole, 2.0), whole, prm, 32), sobolev::SobolevError);
  const auto u = random_field(whole, 3);
  std::vector<double> est;
  for (int res : {256, 512, 1024, 2048}) est.push_back(sobolev::oracle_seminorm(u, whole, prm, res));
  for (std::size_t i = 2; i < est.size(); ++i) {
    const double d1 = std::abs(est[i - 1] - est[i - 2]);
    const double d2 = std::abs(est[i] - est[i - 1]);
    CHECK(d2 < d1);
    CHECK(std::log2(d1 / d2) > 0.0);
  }
}

TEST_CASE("quadrature agrees with the extrapolated oracle on random PL fields within 2%") {
  const auto whole = Region::whole(polygon64());
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto u = random_field(whole, seed);
    for (double s : {0.25, 0.5, 0.75}) {
      const auto prm = SobolevParams::make(s, 2, 1);
      const double q = sobolev::gagliardo_seminorm(u, whole, prm).value;
      const double o = sobolev::oracle_seminorm_extrapolated(u, whole, prm, 2048);
      CHECK_MESSAGE(rel(q, o) < 0.02, "seed ", seed, " s ", s);
    }
  }
}

TEST_CASE("dilation covariance of lp and seminorm powers") {
  for (const auto& base : {polygon64(), share(geometry::icosphere(1))}) {
    const int k = base->intrinsic_dim();
    const auto whole = Region::whole(base);
    const auto u = random_field(whole, 9);
    const auto prm = SobolevParams::make(0.5, 2, k);
    const double lp = sobolev::lp_norm_power(u, whole, 2.0);
    const double semi = sobolev::gagliardo_seminorm(u, whole, prm).power;
    for (double lambda : {0.5, 2.0, 10.0}) {
      const auto m = share(geometry::dilate(*base, lambda));
      const auto w = Region::whole(m);
      const auto ul = ScalarField::on_manifold(m, std::vector<double>(u.values().begin(), u.values().end()));
      CHECK(rel(sobolev::lp_norm_power(ul, w, 2.0) / lp, std::pow(lambda, k)) < 1e-10);
      CHECK(rel(sobolev::gagliardo_seminorm(ul, w, prm).power / semi, std::pow(lambda, k - 0.5 * 2)) < 1e-10);
    }
  }
}

TEST_CASE("wsp norm combines its components exactly") {
  const auto whole = Region::whole(polygon64());
  const auto u = cos_theta(whole);
  const auto prm = SobolevParams::make(0.5, 2, 1);
  const auto rec = sobolev::wsp_norm(u, whole, prm);
  CHECK(rec.wsp == doctest::Approx(std::sqrt(rec.lp * rec.lp + rec.seminorm * rec.seminorm)).epsilon(1e-15));
  CHECK(rec.lp == sobolev::lp_norm(u, whole, 2.0));
  CHECK(rec.seminorm == sobolev::gagliardo_seminorm(u, whole, prm).value);
  const auto arc = geometry::make_region(polygon64(), geometry::ArcSelector{0, 1});
  CHECK(rel(sobolev::wsp_norm(ScalarField::constant(arc, 1.0), arc, prm).wsp, std::sqrt(geometry::measure(arc))) < 1e-14);
  CHECK(sobolev::wsp_norm(ScalarField::constant(arc, 0.0), arc, prm).wsp == 0.0);
}

TEST_CASE("triangle inequality of the W^{s,p} norm") {
  for (const auto& m : {polygon64(), share(geometry::icosphere(1))}) {
    const auto whole = Region::whole(m);
    const auto prm = SobolevParams::make(0.5, 2, m->intrinsic_dim());
    for (unsigned seed = 20; seed < 24; ++seed) {
      const auto u = random_field(whole, seed);
      const auto v = random_field(whole, seed + 100);
      const double lhs = sobolev::wsp_norm(u.combine(1.0, v, 1.0), whole, prm).wsp;
      CHECK(lhs <= sobolev::wsp_norm(u, whole, prm).wsp + sobolev::wsp_norm(v, whole, prm).wsp + 1e-10);
    }
  }
}

TEST_CASE("pair integral is symmetric in its two sets") {
  const auto whole = Region::whole(polygon64());
  const auto u = random_field(whole, 5);
  const auto a = geometry::make_region(polygon64(), geometry::SimplexListSelector{{0, 1, 2, 3}});
  const auto b = geometry::make_region(polygon64(), geometry::SimplexListSelector{{4, 5, 6, 7, 8}});
  const auto prm = SobolevParams::make(0.5, 2, 1);
  const double ab = sobolev::pair_integral(u, a, b, prm).value;
  const double ba = sobolev::pair_integral(u, b, a, prm).value;
  CHECK(rel(ab, ba) < 1e-12);
}

TEST_CASE("results do not depend on the worker count") {
  const auto ico = share(geometry::icosphere(1));
  const auto whole = Region::whole(ico);
  const auto u = random_field(whole, 17);
  const auto prm = SobolevParams::make(0.25, 2, 2);
  quadrature::QuadratureSpec q1;
  quadrature::QuadratureSpec q8;
  q8.workers = 8;
  const auto a = sobolev::gagliardo_seminorm(u, whole, prm, q1);
  const auto b = sobolev::gagliardo_seminorm(u, whole, prm, q8);
  CHECK(a.value == b.value);
  CHECK(a.error_estimate == b.error_estimate);
}

TEST_CASE("restrict keeps values and never increases norms") {
  const auto whole = Region::whole(polygon64());
  const auto u = random_field(whole, 2);
  const auto arc = geometry::make_region(polygon64(), geometry::SimplexListSelector{{10, 11, 12, 13}});
  const auto r = sobolev::restrict(u, arc);
  for (int s : arc.simplex_ids()) CHECK(r.evaluate(s, {0.3, 0.7, 0}) == u.evaluate(s, {0.3, 0.7, 0}));
  CHECK(sobolev::lp_norm(r, arc, 2.0) <= sobolev::lp_norm(u, whole, 2.0));
  const auto same = sobolev::restrict(u, whole);
  for (int v = 0; v < 64; ++v) CHECK(same.value(v) == u.value(v));
  CHECK_THROWS_AS(sobolev::restrict(r, whole), sobolev::SobolevError);
}

TEST_CASE("field CSV round trip") {
  const auto whole = Region::whole(polygon64());
  const auto u = random_field(whole, 4);
  const auto path = std::filesystem::temp_directory_path() / "fracsob_field_roundtrip.csv";
  sobolev::save_field_csv(u, path);
  const auto back = sobolev::load_field_csv(whole, path);
  for (int v = 0; v < 64; ++v) CHECK(back.value(v) == u.value(v));
}
