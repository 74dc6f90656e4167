#include "fracsob/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

#include "fracsob/atlas.hpp"
#include "fracsob/builtin_meshes.hpp"
#include "fracsob/config.hpp"
#include "fracsob/extension.hpp"
#include "fracsob/sobolev.hpp"

namespace fracsob::harness {

namespace {

using geometry::ManifoldPtr;
using geometry::Region;
using sobolev::ScalarField;
using sobolev::SobolevParams;

constexpr double kQuadratureRelTol = 1e-9;
constexpr double kOracleRelTol = 1e-9;
constexpr double kChartRelTol = 1e-9;
constexpr double kSlopeAbsTol = 0.01;
constexpr double kExtensionRelTol = 1e-6;
constexpr int kFixtureVersion = 1;

const std::vector<double> kOrders{0.25, 0.5, 0.75};
const std::vector<std::string> kSeminormFields{"x", "xy", "tent"};

ManifoldPtr builtin(const std::string& name, int resolution) {
  return std::make_shared<const geometry::SimplicialManifold>(geometry::builtin_mesh(name, resolution));
}

struct SeminormMesh {
  std::string name;
  int resolution;
  int oracle_resolution;
};

const std::vector<SeminormMesh>& seminorm_meshes() {
  static const std::vector<SeminormMesh> m{{"circle-polygon", 64, 2048}, {"icosphere", 2, 11520}};
  return m;
}

std::string tag(double s) { return fmt::format("s{:.2f}", s); }

void seminorm_group(const SuiteOptions& opt, bool oracle, std::vector<DerivedValue>& out) {
  for (const auto& sm : seminorm_meshes()) {
    const auto mesh = builtin(sm.name, sm.resolution);
    const auto whole = Region::whole(mesh);
    const std::string mname = fmt::format("{}({})", sm.name, sm.resolution);
    for (const auto& f : kSeminormFields) {
      const auto u = ScalarField::sample(whole, field_function(f));
      for (double s : kOrders) {
        const auto prm = SobolevParams::make(s, 2.0, mesh->intrinsic_dim());
        if (oracle) {
          out.push_back({fmt::format("oracle.{}.{}.{}", mname, f, tag(s)),
                         sobolev::oracle_seminorm_extrapolated(u, whole, prm, sm.oracle_resolution), kOracleRelTol,
                         0.0,
                         fmt::format("extrapolated midpoint oracle, resolution {}, p = 2", sm.oracle_resolution)});
        } else {
          out.push_back({fmt::format("seminorm.{}.{}.{}", mname, f, tag(s)),
                         sobolev::gagliardo_seminorm(u, whole, prm, opt.quadrature).value, kQuadratureRelTol, 0.0,
                         "graded pair quadrature, p = 2"});
        }
      }
    }
  }
}

void chart_group(std::vector<DerivedValue>& out) {
  const std::vector<std::pair<std::string, int>> meshes{
      {"circle-polygon", 64}, {"square-boundary", 8}, {"icosphere", 2}, {"cube-surface", 1}};
  for (const auto& [name, res] : meshes) {
    const auto mesh = builtin(name, res);
    const double eps = atlas::select_epsilon(mesh);
    const auto c = atlas::estimate_constants(atlas::build_atlas(mesh, eps));
    const std::string base = fmt::format("chart.{}({})", name, res);
    const std::string src = "vertex atlas at the selected epsilon";
    out.push_back({base + ".epsilon", eps, kChartRelTol, 0.0, src});
    out.push_back({base + ".L", c.L, kChartRelTol, 0.0, src});
    out.push_back({base + ".L_hat", c.L_hat, kChartRelTol, 0.0, src});
    out.push_back({base + ".J", c.J, kChartRelTol, 0.0, src});
    out.push_back({base + ".J_hat", c.J_hat, kChartRelTol, 0.0, src});
  }
}

void ratio_group(const SuiteOptions& opt, std::vector<DerivedValue>& out) {
  constexpr int kLevel = 12;
  const auto mesh = builtin("graded-circle", kLevel);
  std::vector<Region> regions;
  for (int j = 5; j <= kLevel; ++j) {
    regions.push_back(geometry::make_region(mesh, geometry::ArcSelector{0.0, 2.0 * M_PI * std::pow(2.0, -j)}));
  }
  const std::vector<extension::NamedField> fields{{"one", field_function("one")}, {"x", field_function("x")}};
  extension::ExtensionOptions eo;
  eo.quadrature = opt.quadrature;
  for (double s : kOrders) {
    const auto st = extension::ratio_study(fields, regions, SobolevParams::make(s, 2.0, 1), eo);
    for (std::size_t f = 0; f < st.fields.size(); ++f) {
      const std::string src = "graded-circle(12), arcs [0, 2 pi 2^-j], j = 5..12, p = 2";
      out.push_back({fmt::format("ratio.slope.{}.{}", st.fields[f], tag(s)), st.slope[f], 0.0, kSlopeAbsTol, src});
      out.push_back(
          {fmt::format("ratio.naive_slope.{}.{}", st.fields[f], tag(s)), st.naive_slope[f], 0.0, kSlopeAbsTol, src});
    }
  }
}

void extension_group(const SuiteOptions& opt, std::vector<DerivedValue>& out) {
  extension::ExtensionOptions eo;
  eo.quadrature = opt.quadrature;
  const auto prm = SobolevParams::make(0.5, 2.0, 1);
  const auto circle = builtin("circle-polygon", 256);
  auto ratio_on = [&](double angle) {
    const auto omega = geometry::make_region(circle, geometry::ArcSelector{0.0, angle});
    const auto u = ScalarField::sample(omega, field_function("cos"));
    return extension::extend(u, omega, prm, eo).report.ratio;
  };
  const double half = ratio_on(M_PI);
  const double quarter = ratio_on(M_PI / 2);
  const std::string rsrc = "circle-polygon(256), u = cos, s = 0.5, p = 2";
  out.push_back({"extension.R.half_arc", half, kExtensionRelTol, 0.0, rsrc});
  out.push_back({"extension.R.quarter_arc", quarter, kExtensionRelTol, 0.0, rsrc});
  out.push_back({"extension.R.half_over_quarter", half / quarter, kExtensionRelTol, 0.0, rsrc});

  auto chart_constant = [&](const ManifoldPtr& mesh, const Region& omega) {
    const auto u = ScalarField::sample(omega, field_function("cos"));
    const auto chart = atlas::build_chart(mesh, atlas::vertex_point(*mesh, 0), 0.2);
    const auto ext = extension::chart_extend(u, chart, omega, prm, opt.quadrature, false);
    return extension::chart_extension_constant(ext, u, chart, omega, prm, opt.quadrature);
  };
  const auto polygon = builtin("circle-polygon", 64);
  const auto omega = geometry::make_region(polygon, geometry::ArcSelector{0.0, M_PI / 2});
  const auto ref = geometry::refine(omega.mesh());
  const auto omega_fine = geometry::refine(omega, ref);
  const std::string csrc = "circle-polygon(64), quarter arc, chart at angle 0 with eps 0.2, u = cos, s = 0.5";
  out.push_back({"extension.chart_constant.coarse", chart_constant(omega.mesh_ptr(), omega), kExtensionRelTol, 0.0, csrc});
  out.push_back({"extension.chart_constant.refined", chart_constant(omega_fine.mesh_ptr(), omega_fine),
                 kExtensionRelTol, 0.0, csrc + ", refined once"});
}

bool selected(const SuiteOptions& opt, const std::string& group) {
  return opt.groups.empty() || std::find(opt.groups.begin(), opt.groups.end(), group) != opt.groups.end();
}

double tolerance(const DerivedValue& v) { return v.abs_tol + v.rel_tol * std::abs(v.value); }

}  // namespace

const std::vector<std::string>& derived_groups() {
  static const std::vector<std::string> g{"seminorm", "oracle", "chart", "ratio", "extension"};
  return g;
}

std::vector<DerivedValue> compute_derived(const SuiteOptions& opt) {
  for (const auto& g : opt.groups) {
    if (std::find(derived_groups().begin(), derived_groups().end(), g) == derived_groups().end()) {
      throw FixtureError(fmt::format("unknown fixture group '{}'", g));
    }
  }
  std::vector<DerivedValue> out;
  if (selected(opt, "seminorm")) seminorm_group(opt, false, out);
  if (selected(opt, "oracle")) seminorm_group(opt, true, out);
  if (selected(opt, "chart")) chart_group(out);
  if (selected(opt, "ratio")) ratio_group(opt, out);
  if (selected(opt, "extension")) extension_group(opt, out);
  return out;
}

FixtureMap load_fixtures(const std::filesystem::path& path) {
  FixtureMap out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw FixtureError(fmt::format("cannot read fixtures '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  if (buf.str().find_first_not_of(" \t\r\n") == std::string::npos) return out;
  try {
    const auto doc = nlohmann::json::parse(buf.str());
    if (!doc.contains("values")) return out;
    for (const auto& [name, v] : doc.at("values").items()) {
      out[name] = DerivedValue{name, v.at("value").get<double>(), v.at("rel_tol").get<double>(),
                               v.at("abs_tol").get<double>(), v.value("source", "")};
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FixtureError(fmt::format("fixtures '{}': {}", path.string(), ex.what()));
  }
  return out;
}

void save_fixtures(const FixtureMap& fixtures, const std::filesystem::path& path) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [name, v] : fixtures) {
    values[name] = {{"value", v.value}, {"rel_tol", v.rel_tol}, {"abs_tol", v.abs_tol}, {"source", v.source}};
  }
  const nlohmann::json doc{{"version", kFixtureVersion}, {"values", values}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FixtureError(fmt::format("cannot write fixtures '{}'", path.string()));
  out << doc.dump(2) << '\n';
}

bool SuiteResult::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const SuiteRow& r) { return r.pass; });
}

SuiteResult compare_fixtures(const std::vector<DerivedValue>& values, const FixtureMap& fixtures) {
  SuiteResult res;
  for (const auto& v : values) {
    SuiteRow row;
    row.name = v.name;
    row.actual = v.value;
    const auto it = fixtures.find(v.name);
    if (it == fixtures.end()) {
      row.expected = std::nan("");
      row.delta = std::nan("");
      row.pass = false;
    } else {
      row.expected = it->second.value;
      row.delta = v.value - it->second.value;
      row.tolerance = tolerance(it->second);
      row.pass = std::abs(row.delta) <= row.tolerance;
    }
    res.rows.push_back(row);
  }
  return res;
}

SuiteResult oracle_suite(const std::filesystem::path& fixtures, const SuiteOptions& opt) {
  auto stored = load_fixtures(fixtures);
  const auto values = compute_derived(opt);
  SuiteResult res = compare_fixtures(values, stored);
  bool changed = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& row = res.rows[i];
    const bool missing = !stored.count(values[i].name);
    if (missing || opt.update) {
      stored[values[i].name] = values[i];
      row.created = missing;
      row.expected = values[i].value;
      row.delta = 0.0;
      row.tolerance = tolerance(values[i]);
      row.pass = true;
      changed = true;
    }
  }
  if (changed) {
    save_fixtures(stored, fixtures);
    res.wrote_fixtures = true;
  }
  return res;
}

void print_suite(const SuiteResult& result, std::ostream& out) {
  for (const auto& r : result.rows) {
    out << fmt::format("{:<6} {:<48} expected {:<24} actual {:<24} delta {:<12.3e} tol {:.3e}\n",
                       r.created ? "NEW" : (r.pass ? "PASS" : "FAIL"), r.name, fmt::format("{:.17g}", r.expected),
                       fmt::format("{:.17g}", r.actual), r.delta, r.tolerance);
  }
  const auto failed = std::count_if(result.rows.begin(), result.rows.end(), [](const SuiteRow& r) { return !r.pass; });
  out << fmt::format("{} values, {} failed{}\n", result.rows.size(), failed,
                     result.wrote_fixtures ? ", fixtures written" : "");
}

}  // namespace fracsob::harness
