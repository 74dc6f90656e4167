#include "fracsob/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

namespace fracsob::geometry {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeometryError(fmt::format("cannot open mesh file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    f(trim(text.substr(0, nl)), line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

double parse_double(std::string_view token, std::size_t line_no) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw GeometryError(fmt::format("parse error at line {}: '{}' is not a number", line_no, token));
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const auto start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

SimplicialManifold parse_obj(std::string_view text) {
  std::vector<Point> verts;
  std::vector<Simplex> tris;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty() || line.front() == '#') return;
    const auto tokens = split_ws(line);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw GeometryError(fmt::format("parse error at line {}: vertex needs 3 coordinates", line_no));
      verts.emplace_back(parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
                         parse_double(tokens[3], line_no));
    } else if (tokens[0] == "f") {
      if (tokens.size() != 4) {
        throw GeometryError(fmt::format("parse error at line {}: face {} is not a triangle", line_no, tris.size()));
      }
      Simplex s{};
      for (int j = 0; j < 3; ++j) {
        auto tok = tokens[j + 1];
        tok = tok.substr(0, tok.find('/'));
        int idx = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
        if (ec != std::errc() || ptr != tok.data() + tok.size()) {
          throw GeometryError(fmt::format("parse error at line {}: bad face index '{}'", line_no, tok));
        }
        s[j] = idx > 0 ? idx - 1 : static_cast<int>(verts.size()) + idx;
      }
      tris.push_back(s);
    }
  });
  return SimplicialManifold::create(3, 2, std::move(verts), std::move(tris));
}

SimplicialManifold parse_polyline_csv(std::string_view text) {
  std::vector<Point> verts;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty() || line.front() == '#') return;
    const auto fields = split(line, ',');
    if (fields.size() != 2) {
      throw GeometryError(fmt::format("parse error at line {}: expected 'x,y'", line_no));
    }
    verts.emplace_back(parse_double(fields[0], line_no), parse_double(fields[1], line_no), 0.0);
  });
  if (verts.size() < 3) throw GeometryError("polyline needs at least 3 vertices");
  std::vector<Simplex> segs;
  const int n = static_cast<int>(verts.size());
  for (int i = 0; i < n; ++i) segs.push_back({i, (i + 1) % n, -1});
  return SimplicialManifold::create(2, 1, std::move(verts), std::move(segs));
}

SimplicialManifold load_mesh(const std::filesystem::path& path, MeshFormat format) {
  const auto text = read_file(path);
  return format == MeshFormat::obj ? parse_obj(text) : parse_polyline_csv(text);
}

SimplicialManifold load_mesh(const std::filesystem::path& path) {
  return load_mesh(path, path.extension() == ".obj" ? MeshFormat::obj : MeshFormat::polyline_csv);
}

void save_obj(const SimplicialManifold& mesh, const std::filesystem::path& path) {
  if (mesh.intrinsic_dim() != 2) throw GeometryError("save_obj requires a triangle mesh");
  std::ofstream out(path);
  if (!out) throw GeometryError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& v : mesh.vertices()) out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& s : mesh.simplices()) out << fmt::format("f {} {} {}\n", s[0] + 1, s[1] + 1, s[2] + 1);
}

void save_polyline_csv(const SimplicialManifold& mesh, const std::filesystem::path& path) {
  if (mesh.intrinsic_dim() != 1) throw GeometryError("save_polyline_csv requires a polyline");
  std::ofstream out(path);
  if (!out) throw GeometryError(fmt::format("cannot write '{}'", path.string()));
  // Walk the loop from simplex 0 so the implicit closing edge matches.
  int s = 0;
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    const auto& v = mesh.vertex(mesh.simplex(s)[0]);
    out << fmt::format("{:.17g},{:.17g}\n", v.x(), v.y());
    s = mesh.neighbors(s)[0];
  }
}

}  // namespace fracsob::geometry
