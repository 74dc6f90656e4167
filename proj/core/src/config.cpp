#include "fracsob/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "fracsob/builtin_meshes.hpp"
#include "fracsob/mesh_io.hpp"

namespace fracsob::harness {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    const auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw ConfigError(fmt::format("config field \"{}\": '{}' is not a finite number", key, text));
  }
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(text.data(), last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(fmt::format("config field \"{}\": '{}' is not an integer", key, text));
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  throw ConfigError(fmt::format("config field \"{}\": '{}' is not a boolean", key, text));
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    if (item == "pi") {
      out.push_back(M_PI);
    } else if (item.rfind("pi/", 0) == 0) {
      out.push_back(M_PI / parse_double(key, item.substr(3)));
    } else {
      out.push_back(parse_double(key, item));
    }
  }
  if (out.empty()) throw ConfigError(fmt::format("config field \"{}\": empty list", key));
  return out;
}

StudyKind parse_study(const std::string& text) {
  static const std::map<std::string, StudyKind> kinds{{"norms", StudyKind::norms},
                                                      {"charts", StudyKind::charts},
                                                      {"scaling", StudyKind::scaling},
                                                      {"lemma-checks", StudyKind::lemma_checks},
                                                      {"ratio-study", StudyKind::ratio_study}};
  const auto it = kinds.find(text);
  if (it == kinds.end()) {
    throw ConfigError(fmt::format(
        "config field \"study\": unknown study '{}' (norms, charts, scaling, lemma-checks, ratio-study)", text));
  }
  return it->second;
}

RegionKind parse_region(const std::string& text) {
  static const std::map<std::string, RegionKind> kinds{
      {"whole", RegionKind::whole}, {"arc", RegionKind::arc}, {"cap", RegionKind::cap}, {"halfspace", RegionKind::halfspace}};
  const auto it = kinds.find(text);
  if (it == kinds.end()) {
    throw ConfigError(fmt::format("config field \"region\": unknown region '{}' (whole, arc, cap, halfspace)", text));
  }
  return it->second;
}

}  // namespace

std::string_view to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::norms: return "norms";
    case StudyKind::charts: return "charts";
    case StudyKind::scaling: return "scaling";
    case StudyKind::lemma_checks: return "lemma-checks";
    case StudyKind::ratio_study: return "ratio-study";
  }
  return "unknown";
}

std::string_view to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::whole: return "whole";
    case RegionKind::arc: return "arc";
    case RegionKind::cap: return "cap";
    case RegionKind::halfspace: return "halfspace";
  }
  return "unknown";
}

std::string MeshSource::describe() const {
  if (!name.empty()) return fmt::format("{}({})", name, resolution);
  return file.string();
}

MeshSource parse_mesh_source(std::string_view text) {
  const auto t = trim(text);
  if (t.empty()) throw ConfigError("config field \"mesh\": empty mesh source");
  const auto open = t.find('(');
  if (open != std::string::npos && t.back() == ')') {
    MeshSource src;
    src.name = trim(std::string_view(t).substr(0, open));
    src.resolution = parse_int("mesh", trim(std::string_view(t).substr(open + 1, t.size() - open - 2)));
    return src;
  }
  MeshSource src;
  src.file = t;
  return src;
}

geometry::ManifoldPtr load_mesh_source(const MeshSource& source) {
  if (!source.name.empty()) {
    return std::make_shared<const geometry::SimplicialManifold>(geometry::builtin_mesh(source.name, source.resolution));
  }
  return std::make_shared<const geometry::SimplicialManifold>(geometry::load_mesh(source.file));
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
    const auto key = trim(std::string_view(body).substr(0, eq));
    const auto value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("config field \"{}\": given twice", key));
    if (value.empty()) throw ConfigError(fmt::format("config field \"{}\": empty value", key));

    if (key == "study") {
      cfg.study = parse_study(value);
    } else if (key == "mesh") {
      cfg.mesh = parse_mesh_source(value);
      if (cfg.mesh.name.empty() && cfg.mesh.file.is_relative() && !base_dir.empty()) cfg.mesh.file = base_dir / cfg.mesh.file;
    } else if (key == "region") {
      cfg.region = parse_region(value);
    } else if (key == "schedule") {
      cfg.schedule = parse_doubles(key, value);
    } else if (key == "axis") {
      const auto v = parse_doubles(key, value);
      if (v.size() != 3) throw ConfigError("config field \"axis\": expected three components");
      cfg.axis = geometry::Point(v[0], v[1], v[2]);
      if (!(cfg.axis.norm() > 0.0)) throw ConfigError("config field \"axis\": zero vector");
      cfg.axis.normalize();
    } else if (key == "arc_start") {
      cfg.arc_start = parse_double(key, value);
    } else if (key == "fields") {
      cfg.fields = split_list(value);
      for (const auto& f : cfg.fields) field_function(f);
    } else if (key == "s") {
      cfg.s = parse_doubles(key, value);
      for (double s : cfg.s) {
        if (!(s > 0.0 && s < 1.0)) throw ConfigError(fmt::format("config field \"s\": {} is outside (0, 1)", s));
      }
    } else if (key == "p") {
      cfg.p = parse_double(key, value);
      if (!(cfg.p >= 1.0)) throw ConfigError(fmt::format("config field \"p\": {} is below 1", cfg.p));
    } else if (key == "far_order") {
      cfg.quadrature.far_order = parse_int(key, value);
    } else if (key == "near_refinement") {
      cfg.quadrature.near_refinement = parse_int(key, value);
    } else if (key == "separation_ratio") {
      cfg.quadrature.separation_ratio = parse_double(key, value);
    } else if (key == "workers") {
      cfg.quadrature.workers = parse_int(key, value);
    } else if (key == "lambdas") {
      cfg.lambdas = parse_doubles(key, value);
    } else if (key == "refinement_levels") {
      cfg.refinement_levels = parse_int(key, value);
    } else if (key == "checked_charts") {
      cfg.checked_charts = parse_int(key, value);
    } else if (key == "split_bound") {
      cfg.split_bound = parse_bool(key, value);
    } else if (key == "oracle_resolution") {
      cfg.oracle_resolution = parse_int(key, value);
    } else if (key == "slope_window") {
      cfg.slope_window = parse_double(key, value);
    } else if (key == "naive_slope_max") {
      cfg.naive_slope_max = parse_double(key, value);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "deterministic") {
      cfg.deterministic = parse_bool(key, value);
    } else {
      throw ConfigError(fmt::format("config field \"{}\": unknown key", key));
    }
  }
  for (const char* required : {"study", "mesh", "s", "p"}) {
    if (!seen.count(required)) throw ConfigError(fmt::format("config: missing required field \"{}\"", required));
  }
  if (cfg.region != RegionKind::whole && cfg.schedule.empty()) {
    throw ConfigError("config field \"schedule\": required and nonempty for this region");
  }
  try {
    cfg.quadrature.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(fmt::format("config quadrature: {}", ex.what()));
  }
  if (cfg.quadrature.workers < 1) throw ConfigError("config field \"workers\": must be >= 1");
  if (cfg.refinement_levels < 0) throw ConfigError("config field \"refinement_levels\": must be >= 0");
  if (cfg.oracle_resolution != 0 && cfg.oracle_resolution < 64) {
    throw ConfigError("config field \"oracle_resolution\": must be 0 or >= 64");
  }
  for (double l : cfg.lambdas) {
    if (!(l > 0.0)) throw ConfigError("config field \"lambdas\": entries must be positive");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::vector<geometry::Region> build_regions(const ExperimentConfig& config, const geometry::ManifoldPtr& mesh) {
  std::vector<geometry::Region> out;
  if (config.region == RegionKind::whole) {
    out.push_back(geometry::Region::whole(mesh));
    return out;
  }
  for (double v : config.schedule) {
    switch (config.region) {
      case RegionKind::arc:
        out.push_back(geometry::make_region(mesh, geometry::ArcSelector{config.arc_start, config.arc_start + v}));
        break;
      case RegionKind::cap:
        out.push_back(geometry::make_region(mesh, geometry::CapSelector{config.axis, v}));
        break;
      case RegionKind::halfspace:
        out.push_back(geometry::make_region(mesh, geometry::HalfspaceSelector{config.axis, v}));
        break;
      case RegionKind::whole:
        break;
    }
  }
  return out;
}

std::function<double(const geometry::Point&)> field_function(std::string_view name) {
  if (name == "one") return [](const geometry::Point&) { return 1.0; };
  if (name == "x") return [](const geometry::Point& x) { return x.x(); };
  if (name == "y") return [](const geometry::Point& x) { return x.y(); };
  if (name == "z") return [](const geometry::Point& x) { return x.z(); };
  if (name == "xy") return [](const geometry::Point& x) { return x.x() * x.y(); };
  if (name == "cos") {
    return [](const geometry::Point& x) {
      const double r = x.norm();
      return r > 0.0 ? x.x() / r : 0.0;
    };
  }
  if (name == "tent") {
    return [](const geometry::Point& x) { return std::max(0.0, 1.0 - 2.0 * (x - geometry::Point::UnitX()).norm()); };
  }
  throw ConfigError(fmt::format("config field \"fields\": unknown field '{}' (one, x, y, z, xy, cos, tent)", name));
}

}  // namespace fracsob::harness
