#include <cstdlib>
#include <iostream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "fracsob/atlas.hpp"
#include "fracsob/config.hpp"
#include "fracsob/oracle_suite.hpp"
#include "fracsob/studies.hpp"

namespace {

using namespace fracsob;

constexpr const char* kOutEnv = "FRACSOB_OUT";
constexpr const char* kFixturesEnv = "FRACSOB_FIXTURES";
constexpr const char* kDefaultFixtures = "tests/fixtures/derived.json";

std::filesystem::path output_dir(const std::string& flag, const harness::ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  const std::filesystem::path base = std::getenv(kOutEnv) ? std::getenv(kOutEnv) : "fracsob-out";
  return base / std::string(harness::to_string(cfg.study));
}

int cmd_run(const std::string& config, const std::string& out, bool deterministic) {
  const auto cfg = harness::load_config(config);
  return harness::run(cfg, output_dir(out, cfg), deterministic || cfg.deterministic, std::cout);
}

int cmd_oracle(const std::string& fixtures, const std::vector<std::string>& groups, int far_order,
               int near_refinement, int workers, bool update) {
  harness::SuiteOptions opt;
  opt.groups = groups;
  opt.update = update;
  if (far_order > 0) opt.quadrature.far_order = far_order;
  if (near_refinement > 0) opt.quadrature.near_refinement = near_refinement;
  opt.quadrature.workers = workers;
  opt.quadrature.validate();
  std::filesystem::path path = fixtures;
  if (path.empty()) path = std::getenv(kFixturesEnv) ? std::getenv(kFixturesEnv) : kDefaultFixtures;
  const auto res = harness::oracle_suite(path, opt);
  harness::print_suite(res, std::cout);
  return res.all_pass() ? 0 : 1;
}

int cmd_mesh_info(const std::string& source, bool epsilon) {
  const auto mesh = harness::load_mesh_source(harness::parse_mesh_source(source));
  std::cout << fmt::format("mesh: {}\n", source);
  std::cout << fmt::format("intrinsic dimension: {}\nambient dimension: {}\n", mesh->intrinsic_dim(),
                           mesh->ambient_dim());
  std::cout << fmt::format("vertices: {}\nsimplices: {}\n", mesh->num_vertices(), mesh->num_simplices());
  std::cout << fmt::format("measure: {:.17g}\ndiameter: {:.17g}\n", mesh->total_measure(), mesh->diameter());
  std::cout << fmt::format("euler characteristic: {}\n", mesh->euler_characteristic());
  if (epsilon) std::cout << fmt::format("chart epsilon: {:.17g}\n", atlas::select_epsilon(mesh));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Sobolev norms and extension operators on simplicial manifolds"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  bool deterministic = false;
  auto* run = app.add_subcommand("run", "Run the study described by a config file");
  run->add_option("config", config, "Config file (key = value lines)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, fmt::format("Output directory (default: config 'output', then ${}/<study>)", kOutEnv));
  run->add_flag("--deterministic", deterministic, "Byte-identical artifacts: no timings or worker counts");

  std::string fixtures;
  std::vector<std::string> groups;
  int far_order = 0;
  int near_refinement = 0;
  int workers = 1;
  bool update = false;
  auto* oracle = app.add_subcommand("oracle", "Regenerate derived reference values and diff them against fixtures");
  oracle->add_option("--fixtures", fixtures, fmt::format("Fixture file (default: ${} or {})", kFixturesEnv, kDefaultFixtures));
  oracle->add_option("--group", groups, "Restrict to value groups (seminorm, oracle, chart, ratio, extension)");
  oracle->add_option("--far-order", far_order, "Override the far Gauss order");
  oracle->add_option("--near-refinement", near_refinement, "Override the near grading depth");
  oracle->add_option("--workers", workers, "Quadrature worker threads")->check(CLI::PositiveNumber);
  oracle->add_flag("--update", update, "Overwrite fixture values with the regenerated ones");

  std::string mesh;
  bool epsilon = false;
  auto* info = app.add_subcommand("mesh-info", "Print mesh statistics");
  info->add_option("mesh", mesh, "Builtin name(resolution) or mesh file")->required();
  info->add_flag("--epsilon", epsilon, "Also select the chart radius");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config, out, deterministic);
    if (oracle->parsed()) return cmd_oracle(fixtures, groups, far_order, near_refinement, workers, update);
    if (info->parsed()) return cmd_mesh_info(mesh, epsilon);
  } catch (const harness::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 3;
  }
  return 0;
}
