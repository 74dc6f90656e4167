#include "fracsob/builtin_meshes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <fmt/format.h>

namespace fracsob::geometry {

SimplicialManifold circle_polygon(int n) {
  if (n < 8) throw GeometryError(fmt::format("circle-polygon resolution {} below minimum 8", n));
  std::vector<Point> verts;
  std::vector<Simplex> segs;
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n;
    verts.emplace_back(std::cos(th), std::sin(th), 0.0);
    segs.push_back({i, (i + 1) % n, -1});
  }
  return SimplicialManifold::create(2, 1, std::move(verts), std::move(segs));
}

SimplicialManifold square_boundary(int n) {
  if (n < 1) throw GeometryError(fmt::format("square-boundary resolution {} below minimum 1", n));
  const std::array<Point, 4> corners{Point(0.5, -0.5, 0), Point(0.5, 0.5, 0), Point(-0.5, 0.5, 0),
                                     Point(-0.5, -0.5, 0)};
  std::vector<Point> verts;
  for (int side = 0; side < 4; ++side) {
    const Point& a = corners[side];
    const Point& b = corners[(side + 1) % 4];
    for (int i = 0; i < n; ++i) verts.push_back(a + (b - a) * (static_cast<double>(i) / n));
  }
  std::vector<Simplex> segs;
  const int nv = static_cast<int>(verts.size());
  for (int i = 0; i < nv; ++i) segs.push_back({i, (i + 1) % nv, -1});
  return SimplicialManifold::create(2, 1, std::move(verts), std::move(segs));
}

SimplicialManifold icosphere(int level) {
  if (level < 0 || level > 6) throw GeometryError(fmt::format("icosphere level {} outside [0, 6]", level));
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Point> verts{{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<Simplex> tris{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> cache;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int id = static_cast<int>(verts.size()) - 1;
      cache[key] = id;
      return id;
    };
    std::vector<Simplex> next;
    for (const auto& s : tris) {
      const int ab = midpoint(s[0], s[1]);
      const int bc = midpoint(s[1], s[2]);
      const int ca = midpoint(s[2], s[0]);
      next.push_back({s[0], ab, ca});
      next.push_back({ab, s[1], bc});
      next.push_back({ca, bc, s[2]});
      next.push_back({ab, bc, ca});
    }
    tris = std::move(next);
  }
  return SimplicialManifold::create(3, 2, std::move(verts), std::move(tris));
}

SimplicialManifold cube_surface(int level) {
  if (level < 0 || level > 6) throw GeometryError(fmt::format("cube-surface level {} outside [0, 6]", level));
  const int n = 1 << level;
  std::map<std::array<int, 3>, int> index;
  std::vector<Point> verts;
  auto vertex = [&](const std::array<int, 3>& g) {
    if (auto it = index.find(g); it != index.end()) return it->second;
    verts.emplace_back(static_cast<double>(g[0]) / n - 0.5, static_cast<double>(g[1]) / n - 0.5,
                       static_cast<double>(g[2]) / n - 0.5);
    const int id = static_cast<int>(verts.size()) - 1;
    index[g] = id;
    return id;
  };
  std::vector<Simplex> tris;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      // (u, v) ordered so that u x v points outward.
      int u = (axis + 1) % 3;
      int v = (axis + 2) % 3;
      if (sign < 0) std::swap(u, v);
      auto grid = [&](int i, int j) {
        std::array<int, 3> g{};
        g[axis] = sign > 0 ? n : 0;
        g[u] = i;
        g[v] = j;
        return vertex(g);
      };
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const int a = grid(i, j);
          const int b = grid(i + 1, j);
          const int c = grid(i + 1, j + 1);
          const int d = grid(i, j + 1);
          tris.push_back({a, b, c});
          tris.push_back({a, c, d});
        }
      }
    }
  }
  return SimplicialManifold::create(3, 2, std::move(verts), std::move(tris));
}

SimplicialManifold graded_circle(int level) {
  if (level < 1 || level > 30) throw GeometryError(fmt::format("graded-circle level {} outside [1, 30]", level));
  const double finest = 2.0 * std::numbers::pi * std::ldexp(1.0, -level) / 64.0;
  std::vector<double> ang{0.0};
  while (ang.back() < std::numbers::pi) ang.push_back(ang.back() + std::max(finest, ang.back() / 32.0));
  ang.pop_back();
  std::vector<Point> verts;
  for (std::size_t i = ang.size() - 1; i >= 1; --i) verts.emplace_back(std::cos(ang[i]), -std::sin(ang[i]), 0.0);
  for (double a : ang) verts.emplace_back(std::cos(a), std::sin(a), 0.0);
  const int n = static_cast<int>(verts.size());
  std::vector<Simplex> segs;
  for (int i = 0; i < n; ++i) segs.push_back({i, (i + 1) % n, -1});
  return SimplicialManifold::create(2, 1, std::move(verts), std::move(segs));
}

SimplicialManifold builtin_mesh(std::string_view name, int resolution) {
  if (name == "circle-polygon") return circle_polygon(resolution);
  if (name == "graded-circle") return graded_circle(resolution);
  if (name == "square-boundary") return square_boundary(resolution);
  if (name == "icosphere") return icosphere(resolution);
  if (name == "cube-surface") return cube_surface(resolution);
  throw GeometryError(fmt::format(
      "unknown builtin mesh '{}' (known: circle-polygon, square-boundary, icosphere, cube-surface, graded-circle)", name));
}

}  // namespace fracsob::geometry
