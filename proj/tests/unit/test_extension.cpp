#include <cmath>
#include <numbers>

#include "doctest.h"

#include "fracsob/atlas.hpp"
#include "fracsob/builtin_meshes.hpp"
#include "fracsob/extension.hpp"
#include "fracsob/oracle_suite.hpp"

using namespace fracsob;
using extension::ExtensionError;
using extension::ExtensionOptions;
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

Region arc(double angle) { return geometry::make_region(polygon64(), geometry::ArcSelector{0.0, angle}); }

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double cos_theta(const Point& x) { return x.x() / x.norm(); }

bool all_hold(const std::vector<extension::LemmaCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.holds) return false;
  }
  return true;
}

const SobolevParams kHalf = SobolevParams::make(0.5, 2.0, 1);

}  // namespace

TEST_CASE("C_omega follows its closed form") {
  for (double m : {0.01, 0.5, 3.0}) {
    for (double s : {0.25, 0.75}) {
      for (int k : {1, 2}) {
        const auto prm = SobolevParams::make(s, 2.0, k);
        const double expected = 1.0 + std::pow(m, -s * 2.0 / k) + std::pow(m, (1.0 - s) * 2.0 / k);
        CHECK(rel(extension::c_omega(m, prm), expected) < 1e-15);
      }
    }
  }
}

TEST_CASE("zero extension: identity, lp, cross term computed two ways") {
  const auto omega = arc(kPi);
  const auto u = ScalarField::sample(omega, [](const Point& x) { return std::max(0.0, 0.8 - (x - Point(0, 1, 0)).norm()); });
  const auto support = extension::support_of(u);
  REQUIRE(support.num_simplices() > 0);
  const auto z = extension::zero_extend(u, support, kHalf, {});
  CHECK(z.distance > 0.0);
  REQUIRE(z.checks.size() == 1);
  CHECK(z.checks.front().holds);
  CHECK(rel(sobolev::lp_norm_power(z.field, Region::whole(omega.mesh_ptr()), 2.0),
            sobolev::lp_norm_power(u, omega, 2.0)) < 1e-13);

  const Region whole = Region::whole(omega.mesh_ptr());
  const double diff = sobolev::gagliardo_seminorm(z.field, whole, kHalf).power -
                      sobolev::gagliardo_seminorm(u, omega, kHalf).power;
  const double cross = 2.0 * sobolev::pair_integral(z.field, omega.complement(), omega, kHalf).value;
  CHECK(rel(diff, cross) < 0.02);

  const auto zero = ScalarField::constant(omega, 0.0);
  const auto z0 = extension::zero_extend(zero, extension::support_of(zero), kHalf, {});
  for (double v : z0.field.values()) CHECK(v == 0.0);
}

TEST_CASE("zero extension rejects invalid supports") {
  const auto omega = arc(kPi);
  const auto one = ScalarField::constant(omega, 1.0);
  CHECK_THROWS_WITH_AS(extension::zero_extend(one, omega.complement(), kHalf, {}), doctest::Contains("outside the domain"),
                       ExtensionError);
  const auto inner = geometry::make_region(omega.mesh_ptr(), geometry::SimplexListSelector{{10, 11, 12}});
  CHECK_THROWS_WITH_AS(extension::zero_extend(one, inner, kHalf, {}), doctest::Contains("outside the support"),
                       ExtensionError);
  CHECK_THROWS_WITH_AS(extension::zero_extend(one, omega, kHalf, {}), doctest::Contains("= 0"), ExtensionError);
}

TEST_CASE("truncation by constants, tents and invalid cutoffs") {
  const auto omega = arc(kPi / 2);
  const auto whole = Region::whole(omega.mesh_ptr());
  const auto u = ScalarField::sample(omega, cos_theta);
  const auto t1 = extension::truncate(u, ScalarField::constant(whole, 1.0), 0.0, 0.2, kHalf, {});
  for (int v = 0; v < omega.mesh().num_vertices(); ++v) CHECK(t1.field.value(v) == u.value(v));
  CHECK(all_hold(t1.checks));
  const auto t0 = extension::truncate(u, ScalarField::constant(whole, 0.0), 0.0, 0.2, kHalf, {});
  for (double v : t0.field.values()) CHECK(v == 0.0);
  CHECK_THROWS_WITH_AS(extension::truncate(u, ScalarField::constant(whole, 1.5), 0.0, 0.2, kHalf, {}),
                       doctest::Contains("outside [0, 1]"), ExtensionError);

  const auto one = ScalarField::constant(omega, 1.0);
  const auto tent = ScalarField::sample(whole, [](const Point& x) { return std::max(0.0, 1.0 - 2.0 * (x - Point(1, 0, 0)).norm()); });
  extension::TruncationOptions opt;
  opt.split_bound = true;
  const auto tt = extension::truncate(one, tent, 2.0 / std::cos(kPi / 64), 0.2, kHalf, {}, opt);
  CHECK(tt.checks.size() == 3);
  CHECK(all_hold(tt.checks));
  for (const auto& c : tt.checks) {
    if (c.quantity == "lp-monotone") CHECK(c.ratio < 1.0);
  }
}

TEST_CASE("chart extension reflects evenly across the boundary point") {
  const auto omega = arc(kPi / 2);
  const auto& mesh = omega.mesh_ptr();
  REQUIRE((mesh->vertex(0) - Point(1, 0, 0)).norm() < 1e-14);
  const auto chart = atlas::build_chart(mesh, atlas::vertex_point(*mesh, 0), 0.2);

  const auto c = extension::chart_extend(ScalarField::constant(omega, 2.5), chart, omega, kHalf, {}, false);
  for (const auto& pc : chart.pieces()) {
    for (int j = 0; j < 2; ++j) CHECK(c.field.value(mesh->simplex(pc.simplex)[j]) == doctest::Approx(2.5).epsilon(1e-14));
  }
  CHECK(c.reflected > 0);
  CHECK(c.flagged == 0);

  const auto angle = ScalarField::sample(omega, [](const Point& x) { return std::atan2(x.y(), x.x()); });
  const auto a = extension::chart_extend(angle, chart, omega, kHalf, {}, true);
  CHECK(all_hold(a.checks));
  for (const auto& pc : chart.pieces()) {
    for (int j = 0; j < 2; ++j) {
      const int v = mesh->simplex(pc.simplex)[j];
      const Point& x = mesh->vertex(v);
      CHECK(a.field.value(v) == doctest::Approx(std::abs(std::atan2(x.y(), x.x()))).epsilon(1e-12));
    }
  }
}

TEST_CASE("chart extension constant is stable under refinement and matches the fixtures") {
  const auto omega = arc(kPi / 2);
  const auto ref = geometry::refine(omega.mesh());
  const auto fine = geometry::refine(omega, ref);
  auto constant = [](const Region& w) {
    const auto u = ScalarField::sample(w, cos_theta);
    const auto chart = atlas::build_chart(w.mesh_ptr(), atlas::vertex_point(w.mesh(), 0), 0.2);
    const auto ext = extension::chart_extend(u, chart, w, kHalf, {}, false);
    return extension::chart_extension_constant(ext, u, chart, w, kHalf, {});
  };
  const double coarse = constant(omega);
  const double refined = constant(fine);
  CHECK(coarse >= 1.0);
  CHECK(rel(refined, coarse) < 0.2);
  const auto fx = harness::load_fixtures(FRACSOB_FIXTURES_FILE);
  const auto& fc = fx.at("extension.chart_constant.coarse");
  const auto& fr = fx.at("extension.chart_constant.refined");
  CHECK(std::abs(coarse - fc.value) <= fc.abs_tol + fc.rel_tol * std::abs(fc.value));
  CHECK(std::abs(refined - fr.value) <= fr.abs_tol + fr.rel_tol * std::abs(fr.value));
}

TEST_CASE("extension of u = 1 stays in [0, 1] and agrees with u on omega") {
  const auto omega = arc(kPi / 2);
  const auto res = extension::extend(ScalarField::constant(omega, 1.0), omega, kHalf);
  CHECK(res.report.agreement_residual <= 1e-8);
  for (double v : res.eu.values()) {
    CHECK(v >= -1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
  CHECK(res.report.ratio > 0.0);
  CHECK(res.report.naive_ratio >= res.report.ratio);
}

TEST_CASE("extension of u = 0 vanishes") {
  const auto omega = arc(kPi / 2);
  const auto res = extension::extend(ScalarField::constant(omega, 0.0), omega, kHalf);
  for (double v : res.eu.values()) CHECK(v == 0.0);
  CHECK(res.report.ratio == 0.0);
}

TEST_CASE("extension ratio of cos theta on half and quarter arcs differs by at most a factor 4") {
  auto ratio = [](double angle) {
    const auto omega = arc(angle);
    return extension::extend(ScalarField::sample(omega, cos_theta), omega, kHalf).report.ratio;
  };
  const double q = ratio(kPi) / ratio(kPi / 2);
  CHECK(q >= 0.25);
  CHECK(q <= 4.0);
}

TEST_CASE("extension is linear for a fixed cover") {
  const auto omega = arc(kPi / 2);
  ExtensionOptions opt;
  opt.norms = false;
  const auto u = ScalarField::sample(omega, cos_theta);
  const auto v = ScalarField::sample(omega, [](const Point& x) { return x.x() * x.y(); });
  const auto eu = extension::extend(u, omega, kHalf, opt).eu;
  const auto ev = extension::extend(v, omega, kHalf, opt).eu;
  const auto ew = extension::extend(u.combine(0.7, v, -1.3), omega, kHalf, opt).eu;
  double defect = 0.0;
  for (int i = 0; i < ew.mesh().num_vertices(); ++i) {
    defect = std::max(defect, std::abs(ew.value(i) - (0.7 * eu.value(i) - 1.3 * ev.value(i))));
  }
  CHECK(defect <= 1e-10);
}

TEST_CASE("Eu vanishes farther than eps from omega") {
  for (double angle : {kPi / 2, kPi / 8}) {
    const auto omega = arc(angle);
    const auto res = extension::extend(ScalarField::sample(omega, cos_theta), omega, kHalf);
    const double eps = res.report.epsilon;
    REQUIRE(eps > 0.0);
    int outside = 0;
    for (int v = 0; v < res.eu.mesh().num_vertices(); ++v) {
      if (geometry::dist_to_set(res.eu.mesh().vertex(v), res.omega) > eps) {
        CHECK(res.eu.value(v) == 0.0);
        ++outside;
      }
    }
    CHECK(outside > 0);
  }
}

TEST_CASE("extension commutes with dilation") {
  const auto omega = arc(kPi / 4);
  const auto u = ScalarField::sample(omega, cos_theta);
  ExtensionOptions opt;
  opt.norms = false;
  const auto base = extension::extend(u, omega, kHalf, opt);
  for (double lambda : {0.5, 2.0}) {
    const auto scaled = geometry::dilate(omega, lambda);
    const auto ul = ScalarField::on_region(scaled, std::vector<double>(u.values().begin(), u.values().end()));
    const auto res = extension::extend(ul, scaled, kHalf, opt);
    CHECK(rel(res.report.epsilon, lambda * base.report.epsilon) < 1e-12);
    REQUIRE(res.eu.mesh().num_vertices() == base.eu.mesh().num_vertices());
    double diff = 0.0;
    for (int v = 0; v < res.eu.mesh().num_vertices(); ++v) diff = std::max(diff, std::abs(res.eu.value(v) - base.eu.value(v)));
    CHECK(diff <= 1e-10);
  }
}

TEST_CASE("every lemma inequality holds on an arc") {
  const auto omega = arc(kPi / 2);
  ExtensionOptions opt;
  opt.lemma_checks = true;
  opt.split_bound = true;
  opt.norms = false;
  for (double s : {0.25, 0.75}) {
    const auto res = extension::extend(ScalarField::sample(omega, cos_theta), omega, SobolevParams::make(s, 2.0, 1), opt);
    CHECK(res.report.checks.size() > 5);
    for (const auto& c : res.report.checks) {
      CHECK_MESSAGE(c.holds, c.lemma, " ", c.quantity, " ", c.instance, ": ", c.lhs, " > ", c.rhs);
    }
  }
}

TEST_CASE("extend rejects mismatched inputs") {
  const auto omega = arc(kPi / 2);
  const auto other = arc(kPi / 3);
  CHECK_THROWS_AS(extension::extend(ScalarField::constant(other, 1.0), omega, kHalf), ExtensionError);
  CHECK_THROWS_AS(extension::ratio_study({}, {omega}, kHalf), ExtensionError);
}
