#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fracsob/geometry.hpp"
#include "fracsob/quadrature.hpp"

namespace fracsob::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StudyKind { norms, charts, scaling, lemma_checks, ratio_study };
enum class RegionKind { whole, arc, cap, halfspace };

std::string_view to_string(StudyKind kind);
std::string_view to_string(RegionKind kind);

/// Builtin `name(resolution)` or a mesh file.
struct MeshSource {
  std::string name;
  int resolution = 0;
  std::filesystem::path file;
  std::string describe() const;
};

/// Parses `circle-polygon(64)`-style builtins; anything else is a file path.
MeshSource parse_mesh_source(std::string_view text);
geometry::ManifoldPtr load_mesh_source(const MeshSource& source);

/**
 * Experiment configuration read from `key = value` lines (`#` starts a comment,
 * lists are comma separated). Required keys: study, mesh, s, p. See
 * docs/config_schema.md for every key.
 */
struct ExperimentConfig {
  StudyKind study = StudyKind::norms;
  MeshSource mesh;
  RegionKind region = RegionKind::whole;
  std::vector<double> schedule;           // arc angles, cap radii or halfspace offsets
  geometry::Point axis = geometry::Point::UnitZ();  // cap center / halfspace normal
  double arc_start = 0.0;
  std::vector<std::string> fields{"one"};
  std::vector<double> s;
  double p = 2.0;
  quadrature::QuadratureSpec quadrature;
  std::vector<double> lambdas{0.5, 1.0, 2.0, 4.0};
  int refinement_levels = 1;
  int checked_charts = -1;
  bool split_bound = false;
  int oracle_resolution = 0;  // 0 disables the oracle columns of the norms study
  double slope_window = 0.15;
  double naive_slope_max = -0.3;
  std::filesystem::path output;
  bool deterministic = false;
};

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Regions of the schedule, in schedule order (one whole-manifold region for `whole`).
std::vector<geometry::Region> build_regions(const ExperimentConfig& config, const geometry::ManifoldPtr& mesh);

/// Named test field: one, x, y, z, cos (x / |x|), xy, tent (hat of radius 1/2 at (1, 0, 0)).
std::function<double(const geometry::Point&)> field_function(std::string_view name);

}  // namespace fracsob::harness
