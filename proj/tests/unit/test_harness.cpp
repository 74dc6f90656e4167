#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"

#include "fracsob/config.hpp"
#include "fracsob/oracle_suite.hpp"
#include "fracsob/report.hpp"
#include "fracsob/studies.hpp"

using namespace fracsob::harness;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fracsob_test_harness" / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Table& table(const StudyResult& r, const std::string& name) {
  for (const auto& t : r.tables) {
    if (t.name == name) return t;
  }
  FAIL("missing table ", name);
  throw std::logic_error("unreachable");
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  FAIL("missing column ", name);
  return 0;
}

void compare_dirs(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto relp = fs::relative(e.path(), a);
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / relp), relp.string());
    ++files;
  }
  CHECK(files > 1);
}

const char* kNorms = R"(study = norms
mesh = circle-polygon(32)
fields = one, x
s = 0.5
p = 2
)";

}  // namespace

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_config("study = norms\nmesh = circle-polygon(32)\np = 2\n"),
                       doctest::Contains("missing required field \"s\""), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(std::string(kNorms) + "colour = red\n"), doctest::Contains("colour"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(std::string(kNorms) + "s = 0.25\n"), doctest::Contains("given twice"), ConfigError);
  CHECK_THROWS_AS(parse_config("study = norms\nmesh = circle-polygon(32)\nregion = arc\ns = 0.5\np = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("study = nothing\nmesh = circle-polygon(32)\ns = 0.5\np = 2\n"), ConfigError);
}

TEST_CASE("config parsing of lists, pi and mesh sources") {
  const auto c = parse_config(
      "study = ratio-study\nmesh = icosphere(2)\nregion = cap\nschedule = pi/2, pi/4, 0.3\nfields = one, tent\n"
      "s = 0.25, 0.75\np = 2\nworkers = 3\n");
  CHECK(c.study == StudyKind::ratio_study);
  CHECK(c.mesh.name == "icosphere");
  CHECK(c.mesh.resolution == 2);
  REQUIRE(c.schedule.size() == 3);
  CHECK(c.schedule[0] == doctest::Approx(std::numbers::pi / 2));
  CHECK(c.schedule[2] == 0.3);
  CHECK(c.fields.size() == 2);
  CHECK(c.quadrature.workers == 3);
  CHECK(parse_mesh_source("meshes/a.obj").file == "meshes/a.obj");
  CHECK_THROWS_AS(field_function("nope"), ConfigError);
}

TEST_CASE("norms study: u = 1 row has lp = |omega|^(1/p) and zero seminorm") {
  const auto r = run_study(parse_config(kNorms));
  const auto& t = table(r, "norms");
  REQUIRE(t.rows.size() == 2);
  const auto& row = t.rows[0];
  CHECK(row[column(t, "field")] == "one");
  const double m = 32 * 2 * std::sin(std::numbers::pi / 32);
  CHECK(std::stod(row[column(t, "lp")]) == doctest::Approx(std::sqrt(m)).epsilon(1e-14));
  CHECK(std::stod(row[column(t, "seminorm")]) == 0.0);
  CHECK(row[column(t, "mesh")] == "circle-polygon(32)");
  CHECK(r.hard_pass());
}

TEST_CASE("scaling study reports exact slopes") {
  const auto r = run_study(parse_config("study = scaling\nmesh = circle-polygon(32)\nregion = arc\nschedule = pi/2\n"
                                        "s = 0.5\np = 2\n"));
  const auto& t = table(r, "scaling");
  for (const char* c : {"slope_L", "slope_L_hat", "slope_J", "slope_J_hat"}) column(t, c);
  const auto& row = t.rows.front();
  CHECK(std::stod(row[column(t, "slope_L")]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::stod(row[column(t, "slope_L_hat")]) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(r.hard_pass());
}

TEST_CASE("emit_report refuses results without records") {
  StudyResult empty;
  empty.study = "norms";
  CHECK_THROWS_WITH_AS(emit_report(empty, temp_dir("empty"), true), doctest::Contains("no records"), ReportError);
  Table t{"x", {"a", "b"}, {}};
  CHECK_THROWS_AS(t.add_row({"1"}), ReportError);
}

TEST_CASE("deterministic reruns are byte identical, also across worker counts") {
  auto cfg = parse_config(
      "study = lemma-checks\nmesh = circle-polygon(32)\nregion = arc\nschedule = pi/2\nfields = one, x\n"
      "s = 0.5\np = 2\n");
  const auto a = temp_dir("det_a");
  const auto b = temp_dir("det_b");
  const auto c = temp_dir("det_c");
  std::ostringstream log;
  CHECK(run(cfg, a, true, log) == 0);
  CHECK(run(cfg, b, true, log) == 0);
  cfg.quadrature.workers = 4;
  CHECK(run(cfg, c, true, log) == 0);
  compare_dirs(a, b);
  compare_dirs(a, c);
  CHECK(fs::exists(a / "fields"));
  CHECK(slurp(a / "summary.txt").find("wall") == std::string::npos);
}

TEST_CASE("ratio study tables carry R and the slope columns") {
  const auto r = run_study(parse_config(
      "study = ratio-study\nmesh = circle-polygon(64)\nregion = arc\nschedule = pi, pi/2, pi/4\nfields = one\n"
      "s = 0.5\np = 2\n"));
  const auto& t = table(r, "ratio");
  CHECK(t.rows.size() == 3);
  for (const char* c : {"R", "naive_R", "c_omega", "epsilon"}) column(t, c);
  const auto& sl = table(r, "ratio_slopes");
  CHECK(sl.rows.size() == 1);
  column(sl, "slope");
  column(sl, "naive_slope");
}

TEST_CASE("the schema document lists every table and column") {
  const std::string doc = slurp(FRACSOB_SCHEMA_DOC);
  REQUIRE_FALSE(doc.empty());
  for (const auto& s : table_schemas()) {
    CHECK_MESSAGE(doc.find("`" + s.table + ".csv`") != std::string::npos, s.table);
    for (const auto& c : s.columns) CHECK_MESSAGE(doc.find("| `" + c + "` |") != std::string::npos, s.table, ".", c);
  }
}

TEST_CASE("oracle suite bootstraps a fixture file and then passes") {
  const auto dir = temp_dir("fixtures");
  fs::create_directories(dir);
  const auto path = dir / "chart.json";
  SuiteOptions opt;
  opt.groups = {"chart"};
  const auto first = oracle_suite(path, opt);
  CHECK(first.wrote_fixtures);
  CHECK(first.all_pass());
  for (const auto& row : first.rows) CHECK(row.created);
  const auto second = oracle_suite(path, opt);
  CHECK_FALSE(second.wrote_fixtures);
  CHECK(second.all_pass());
  for (const auto& row : second.rows) CHECK(row.delta == 0.0);

  auto fx = load_fixtures(path);
  fx.begin()->second.value *= 1.5;
  save_fixtures(fx, path);
  CHECK_FALSE(oracle_suite(path, opt).all_pass());
}

TEST_CASE("a coarser far-field rule is caught by the committed seminorm fixtures") {
  SuiteOptions opt;
  opt.groups = {"seminorm"};
  opt.quadrature.far_order = 2;
  const auto values = compute_derived(opt);
  const auto result = compare_fixtures(values, load_fixtures(FRACSOB_FIXTURES_FILE));
  CHECK_FALSE(result.all_pass());
  bool nonzero = false;
  for (const auto& r : result.rows) nonzero = nonzero || r.delta != 0.0;
  CHECK(nonzero);
}
