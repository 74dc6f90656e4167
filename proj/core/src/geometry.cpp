#include "fracsob/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>

#include <fmt/format.h>

namespace fracsob::geometry {

namespace {

constexpr double kDegeneracyTolerance = 1e-12;
constexpr std::size_t kEmbeddingCheckLimit = 6000;

std::array<int, 2> sorted_pair(int a, int b) { return a < b ? std::array{a, b} : std::array{b, a}; }

double segment_length(const Point& a, const Point& b) { return (b - a).norm(); }

double triangle_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

Point closest_point_segment(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double denom = ab.squaredNorm();
  if (denom == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / denom, 0.0, 1.0);
  return a + t * ab;
}

// Closest point on triangle abc to p (Voronoi region walk).
Point closest_point_triangle(const Point& p, const Point& a, const Point& b, const Point& c) {
  const Point ab = b - a;
  const Point ac = c - a;
  const Point ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Point bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Point cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double segment_segment_distance(const Point& p1, const Point& q1, const Point& p2,
                                const Point& q2) {
  const Point d1 = q1 - p1;
  const Point d2 = q2 - p2;
  const Point r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= 0.0 && e <= 0.0) return r.norm();
  if (a <= 0.0) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 0.0) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

bool segment_hits_triangle(const Point& p, const Point& q, const Point& a, const Point& b,
                           const Point& c, double tol) {
  const Point n = (b - a).cross(c - a);
  const double dp = n.dot(p - a);
  const double dq = n.dot(q - a);
  if ((dp > 0 && dq > 0) || (dp < 0 && dq < 0) || dp == dq) return false;
  const double t = dp / (dp - dq);
  const Point x = p + t * (q - p);
  return (closest_point_triangle(x, a, b, c) - x).norm() <= tol;
}

struct BoundingBox {
  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = Point::Constant(-std::numeric_limits<double>::infinity());
  void add(const Point& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool overlaps(const BoundingBox& o, double pad) const {
    for (int d = 0; d < 3; ++d) {
      if (hi[d] + pad < o.lo[d] || o.hi[d] + pad < lo[d]) return false;
    }
    return true;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// SimplicialManifold

SimplicialManifold SimplicialManifold::create(int ambient_dim, int intrinsic_dim,
                                              std::vector<Point> vertices,
                                              std::vector<Simplex> simplices) {
  auto m = create_trusted(ambient_dim, intrinsic_dim, std::move(vertices), std::move(simplices));
  m.check_embedding();
  return m;
}

SimplicialManifold SimplicialManifold::create_trusted(int ambient_dim, int intrinsic_dim,
                                                      std::vector<Point> vertices,
                                                      std::vector<Simplex> simplices) {
  if (!((ambient_dim == 2 && intrinsic_dim == 1) || (ambient_dim == 3 && intrinsic_dim == 2))) {
    throw GeometryError(fmt::format("unsupported dimensions n = {}, k = {}", ambient_dim,
                                    intrinsic_dim));
  }
  if (simplices.empty()) throw GeometryError("mesh has no simplices");

  SimplicialManifold m;
  m.ambient_dim_ = ambient_dim;
  m.intrinsic_dim_ = intrinsic_dim;
  m.vertices_ = std::move(vertices);
  m.simplices_ = std::move(simplices);

  const int nv = m.num_vertices();
  for (std::size_t i = 0; i < m.simplices_.size(); ++i) {
    auto& s = m.simplices_[i];
    if (intrinsic_dim == 1) s[2] = -1;
    for (int j = 0; j <= intrinsic_dim; ++j) {
      if (s[static_cast<std::size_t>(j)] < 0 || s[static_cast<std::size_t>(j)] >= nv) {
        throw GeometryError(fmt::format("simplex {} references missing vertex {}", i,
                                        s[static_cast<std::size_t>(j)]));
      }
    }
    if (ambient_dim == 2) {
      for (int j = 0; j < 2; ++j) m.vertices_[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])].z() = 0.0;
    }
  }

  BoundingBox box;
  for (const auto& v : m.vertices_) box.add(v);
  m.bbox_diameter_ = (box.hi - box.lo).norm();

  m.volumes_.resize(m.simplices_.size());
  for (std::size_t i = 0; i < m.simplices_.size(); ++i) {
    const auto& s = m.simplices_[i];
    m.volumes_[i] = intrinsic_dim == 1
                        ? segment_length(m.vertex(s[0]), m.vertex(s[1]))
                        : triangle_area(m.vertex(s[0]), m.vertex(s[1]), m.vertex(s[2]));
  }
  m.check_degeneracy();
  m.total_measure_ = std::accumulate(m.volumes_.begin(), m.volumes_.end(), 0.0);
  m.build_topology();

  // Diameter of a PL set is attained at vertices.
  std::vector<char> used(static_cast<std::size_t>(nv), 0);
  for (const auto& s : m.simplices_) {
    for (int j = 0; j <= intrinsic_dim; ++j) used[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])] = 1;
  }
  double diam2 = 0.0;
  for (int i = 0; i < nv; ++i) {
    if (!used[static_cast<std::size_t>(i)]) continue;
    for (int j = i + 1; j < nv; ++j) {
      if (!used[static_cast<std::size_t>(j)]) continue;
      diam2 = std::max(diam2, (m.vertex(i) - m.vertex(j)).squaredNorm());
    }
  }
  m.diameter_ = std::sqrt(diam2);
  return m;
}

void SimplicialManifold::check_degeneracy() const {
  const double scale = std::pow(bbox_diameter_, intrinsic_dim_);
  for (std::size_t i = 0; i < volumes_.size(); ++i) {
    if (!(volumes_[i] > kDegeneracyTolerance * scale)) {
      throw GeometryError(fmt::format("degenerate simplex {} (volume {:.3e})", i, volumes_[i]));
    }
  }
}

void SimplicialManifold::build_topology() {
  const int k = intrinsic_dim_;
  neighbors_.assign(simplices_.size(), {-1, -1, -1});

  // Face key -> (simplex, local vertex opposite the face).
  std::map<std::array<int, 2>, std::vector<std::pair<int, int>>> faces;
  for (int i = 0; i < num_simplices(); ++i) {
    const auto& s = simplex(i);
    for (int j = 0; j <= k; ++j) {
      std::array<int, 2> key{};
      if (k == 1) {
        key = {s[static_cast<std::size_t>(1 - j)], -1};
      } else {
        key = sorted_pair(s[static_cast<std::size_t>((j + 1) % 3)], s[static_cast<std::size_t>((j + 2) % 3)]);
      }
      faces[key].emplace_back(i, j);
    }
  }
  for (const auto& [key, incident] : faces) {
    if (incident.size() != 2) {
      throw GeometryError(fmt::format(
          "non-manifold/open mesh: face ({}, {}) of simplex {} is shared by {} simplices", key[0],
          key[1], incident.front().first, incident.size()));
    }
    const auto [a, ja] = incident[0];
    const auto [b, jb] = incident[1];
    neighbors_[static_cast<std::size_t>(a)][static_cast<std::size_t>(ja)] = b;
    neighbors_[static_cast<std::size_t>(b)][static_cast<std::size_t>(jb)] = a;
  }

  std::vector<char> seen(simplices_.size(), 0);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop();
    for (int j = 0; j <= k; ++j) {
      const int n = neighbors_[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
      if (n >= 0 && !seen[static_cast<std::size_t>(n)]) {
        seen[static_cast<std::size_t>(n)] = 1;
        ++count;
        queue.push(n);
      }
    }
  }
  if (count != simplices_.size()) {
    const auto it = std::find(seen.begin(), seen.end(), 0);
    throw GeometryError(fmt::format("mesh is not connected: simplex {} unreachable from simplex 0",
                                    std::distance(seen.begin(), it)));
  }
}

void SimplicialManifold::check_embedding() const {
  if (simplices_.size() > kEmbeddingCheckLimit) return;
  const double tol = 1e-12 * bbox_diameter_;
  const int n = num_simplices();
  const int nvs = vertices_per_simplex();
  std::vector<BoundingBox> boxes(simplices_.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < nvs; ++j) boxes[static_cast<std::size_t>(i)].add(vertex(simplex(i)[static_cast<std::size_t>(j)]));
  }
  auto shares_vertex = [&](int a, int b) {
    for (int i = 0; i < nvs; ++i) {
      for (int j = 0; j < nvs; ++j) {
        if (simplex(a)[static_cast<std::size_t>(i)] == simplex(b)[static_cast<std::size_t>(j)]) return true;
      }
    }
    return false;
  };
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (!boxes[static_cast<std::size_t>(a)].overlaps(boxes[static_cast<std::size_t>(b)], tol) || shares_vertex(a, b)) continue;
      const auto& sa = simplex(a);
      const auto& sb = simplex(b);
      bool hit = false;
      if (intrinsic_dim_ == 1) {
        hit = segment_segment_distance(vertex(sa[0]), vertex(sa[1]), vertex(sb[0]), vertex(sb[1])) <= tol;
      } else {
        for (int e = 0; e < 3 && !hit; ++e) {
          hit = segment_hits_triangle(vertex(sa[static_cast<std::size_t>(e)]), vertex(sa[static_cast<std::size_t>((e + 1) % 3)]),
                                      vertex(sb[0]), vertex(sb[1]), vertex(sb[2]), tol) ||
                segment_hits_triangle(vertex(sb[static_cast<std::size_t>(e)]), vertex(sb[static_cast<std::size_t>((e + 1) % 3)]),
                                      vertex(sa[0]), vertex(sa[1]), vertex(sa[2]), tol);
        }
      }
      if (hit) {
        throw GeometryError(fmt::format("mesh is not embedded: simplices {} and {} intersect", a, b));
      }
    }
  }
}

Point SimplicialManifold::centroid(int i) const {
  const auto& s = simplex(i);
  Point c = Point::Zero();
  for (int j = 0; j < vertices_per_simplex(); ++j) c += vertex(s[static_cast<std::size_t>(j)]);
  return c / vertices_per_simplex();
}

double SimplicialManifold::simplex_diameter(int i) const {
  const auto& s = simplex(i);
  if (intrinsic_dim_ == 1) return volumes_[static_cast<std::size_t>(i)];
  return std::max({(vertex(s[0]) - vertex(s[1])).norm(), (vertex(s[1]) - vertex(s[2])).norm(),
                   (vertex(s[2]) - vertex(s[0])).norm()});
}

int SimplicialManifold::euler_characteristic() const {
  std::vector<char> used(vertices_.size(), 0);
  for (const auto& s : simplices_) {
    for (int j = 0; j < vertices_per_simplex(); ++j) used[static_cast<std::size_t>(s[static_cast<std::size_t>(j)])] = 1;
  }
  const int v = static_cast<int>(std::count(used.begin(), used.end(), 1));
  const int f = num_simplices();
  if (intrinsic_dim_ == 1) return v - f;
  // Closed surface: every edge bounds exactly two triangles.
  const int e = 3 * f / 2;
  return v - e + f;
}

Point SimplicialManifold::interpolate(int i, const std::array<double, 3>& bary) const {
  const auto& s = simplex(i);
  Point p = Point::Zero();
  for (int j = 0; j < vertices_per_simplex(); ++j) p += bary[static_cast<std::size_t>(j)] * vertex(s[static_cast<std::size_t>(j)]);
  return p;
}

// ---------------------------------------------------------------------------
// Region

Region::Region(ManifoldPtr mesh, std::vector<char> inside)
    : mesh_(std::move(mesh)), inside_(std::move(inside)) {
  if (!mesh_) throw GeometryError("region without mesh");
  if (inside_.size() != static_cast<std::size_t>(mesh_->num_simplices())) {
    throw GeometryError("region mask size does not match mesh");
  }
  vertex_in_closure_.assign(static_cast<std::size_t>(mesh_->num_vertices()), 0);
  for (int i = 0; i < mesh_->num_simplices(); ++i) {
    if (!contains(i)) continue;
    for (int j = 0; j < mesh_->vertices_per_simplex(); ++j) {
      vertex_in_closure_[static_cast<std::size_t>(mesh_->simplex(i)[static_cast<std::size_t>(j)])] = 1;
    }
  }
  extract_boundary();
}

Region Region::whole(ManifoldPtr mesh) {
  std::vector<char> inside(static_cast<std::size_t>(mesh->num_simplices()), 1);
  return Region(std::move(mesh), std::move(inside));
}

void Region::extract_boundary() {
  const auto& m = *mesh_;
  if (m.intrinsic_dim() == 1) {
    for (int i = 0; i < m.num_simplices(); ++i) {
      // Neighbor 0 is across local vertex 1 (the segment end).
      const int next = m.neighbors(i)[0];
      if (contains(i) != contains(next)) boundary_points_.push_back(m.simplex(i)[1]);
    }
    std::sort(boundary_points_.begin(), boundary_points_.end());
    return;
  }
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (!contains(i)) continue;
    const auto& s = m.simplex(i);
    for (int j = 0; j < 3; ++j) {
      const int n = m.neighbors(i)[static_cast<std::size_t>(j)];
      if (!contains(n)) boundary_segments_.push_back({s[static_cast<std::size_t>((j + 1) % 3)], s[static_cast<std::size_t>((j + 2) % 3)]});
    }
  }
}

std::vector<int> Region::simplex_ids() const {
  std::vector<int> ids;
  for (int i = 0; i < mesh_->num_simplices(); ++i) {
    if (contains(i)) ids.push_back(i);
  }
  return ids;
}

int Region::num_simplices() const {
  return static_cast<int>(std::count(inside_.begin(), inside_.end(), 1));
}

bool Region::is_whole() const { return num_simplices() == mesh_->num_simplices(); }

int Region::boundary_components() const {
  if (mesh_->intrinsic_dim() == 1) return static_cast<int>(boundary_points_.size());
  std::map<int, int> parent;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& seg : boundary_segments_) {
    for (int v : seg) {
      if (!parent.contains(v)) parent[v] = v;
    }
    parent[find(seg[0])] = find(seg[1]);
  }
  int roots = 0;
  for (const auto& [v, p] : parent) {
    if (find(v) == v) ++roots;
  }
  return roots;
}

Region Region::complement() const {
  std::vector<char> flipped(inside_.size());
  std::transform(inside_.begin(), inside_.end(), flipped.begin(), [](char c) { return static_cast<char>(!c); });
  return Region(mesh_, std::move(flipped));
}

// ---------------------------------------------------------------------------
// Region construction

namespace {

// A straight cut {f(x) = normal . x - offset = 0}; for a ray cut, crossings only count
// where ray_dir . x > 0.
struct LinearCut {
  Point normal;
  double offset = 0.0;
  std::optional<Point> ray_dir;
  double value(const Point& x) const { return normal.dot(x) - offset; }
};

SimplicialManifold cut_polyline(const SimplicialManifold& m, std::span<const LinearCut> cuts) {
  const double tol = 1e-10 * m.bounding_box_diameter();
  std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
  std::vector<Simplex> segs;
  for (int i = 0; i < m.num_simplices(); ++i) {
    const auto& s = m.simplex(i);
    const Point& a = m.vertex(s[0]);
    const Point& b = m.vertex(s[1]);
    std::vector<double> params;
    for (const auto& cut : cuts) {
      const double fa = cut.value(a);
      const double fb = cut.value(b);
      if (!((fa > tol && fb < -tol) || (fa < -tol && fb > tol))) continue;
      const double t = fa / (fa - fb);
      const Point x = a + t * (b - a);
      if (cut.ray_dir && cut.ray_dir->dot(x) <= 0.0) continue;
      if ((x - a).norm() <= tol || (x - b).norm() <= tol) continue;
      params.push_back(t);
    }
    std::sort(params.begin(), params.end());
    int prev = s[0];
    for (double t : params) {
      verts.push_back(a + t * (b - a));
      const int id = static_cast<int>(verts.size()) - 1;
      segs.push_back({prev, id, -1});
      prev = id;
    }
    segs.push_back({prev, s[1], -1});
  }
  return SimplicialManifold::create_trusted(m.ambient_dim(), 1, std::move(verts), std::move(segs));
}

SimplicialManifold cut_triangles(const SimplicialManifold& m, const LinearCut& cut) {
  const double tol = 1e-10 * m.bounding_box_diameter();
  std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
  std::vector<double> f(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) {
    f[i] = cut.value(verts[i]);
    if (std::abs(f[i]) <= tol) f[i] = 0.0;
  }
  std::map<std::array<int, 2>, int> crossing;
  auto edge_point = [&](int a, int b) -> int {
    const double fa = f[static_cast<std::size_t>(a)];
    const double fb = f[static_cast<std::size_t>(b)];
    if (!((fa > 0 && fb < 0) || (fa < 0 && fb > 0))) return -1;
    const auto key = sorted_pair(a, b);
    if (auto it = crossing.find(key); it != crossing.end()) return it->second;
    const int lo = key[0];
    const int hi = key[1];
    const double flo = f[static_cast<std::size_t>(lo)];
    const double t = flo / (flo - f[static_cast<std::size_t>(hi)]);
    verts.push_back(verts[static_cast<std::size_t>(lo)] + t * (verts[static_cast<std::size_t>(hi)] - verts[static_cast<std::size_t>(lo)]));
    f.push_back(0.0);
    const int id = static_cast<int>(verts.size()) - 1;
    crossing[key] = id;
    return id;
  };

  std::vector<Simplex> tris;
  for (int i = 0; i < m.num_simplices(); ++i) {
    const auto s = m.simplex(i);
    std::array<int, 3> cuts{};
    int ncut = 0;
    for (int j = 0; j < 3; ++j) {
      cuts[static_cast<std::size_t>(j)] = edge_point(s[static_cast<std::size_t>(j)], s[static_cast<std::size_t>((j + 1) % 3)]);
      if (cuts[static_cast<std::size_t>(j)] >= 0) ++ncut;
    }
    if (ncut == 0) {
      tris.push_back(s);
    } else if (ncut == 1) {
      // The cut passes through the vertex opposite the crossed edge.
      for (int j = 0; j < 3; ++j) {
        const int p = cuts[static_cast<std::size_t>(j)];
        if (p < 0) continue;
        const int a = s[static_cast<std::size_t>(j)];
        const int b = s[static_cast<std::size_t>((j + 1) % 3)];
        const int c = s[static_cast<std::size_t>((j + 2) % 3)];
        tris.push_back({a, p, c});
        tris.push_back({p, b, c});
      }
    } else {
      // Edge j is uncut; the lone vertex sits between the two cut edges.
      int j = 0;
      while (cuts[static_cast<std::size_t>(j)] >= 0) ++j;
      const int b = s[static_cast<std::size_t>(j)];
      const int c = s[static_cast<std::size_t>((j + 1) % 3)];
      const int a = s[static_cast<std::size_t>((j + 2) % 3)];
      const int q = cuts[static_cast<std::size_t>((j + 1) % 3)];  // on edge c-a
      const int p = cuts[static_cast<std::size_t>((j + 2) % 3)];  // on edge a-b
      tris.push_back({a, p, q});
      tris.push_back({p, b, c});
      tris.push_back({p, c, q});
    }
  }
  return SimplicialManifold::create_trusted(3, 2, std::move(verts), std::move(tris));
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  return a < 0 ? a + two_pi : a;
}

std::vector<char> flood_components(const SimplicialManifold& m, const std::vector<char>& inside,
                                   int& components) {
  std::vector<char> seen(inside.size(), 0);
  components = 0;
  for (int start = 0; start < m.num_simplices(); ++start) {
    if (!inside[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    std::queue<int> queue;
    queue.push(start);
    seen[static_cast<std::size_t>(start)] = 1;
    while (!queue.empty()) {
      const int s = queue.front();
      queue.pop();
      for (int j = 0; j <= m.intrinsic_dim(); ++j) {
        const int n = m.neighbors(s)[static_cast<std::size_t>(j)];
        if (inside[static_cast<std::size_t>(n)] && !seen[static_cast<std::size_t>(n)]) {
          seen[static_cast<std::size_t>(n)] = 1;
          queue.push(n);
        }
      }
    }
  }
  return seen;
}

}  // namespace

Region make_region(const ManifoldPtr& mesh, const RegionSelector& selector) {
  if (!mesh) throw GeometryError("make_region: null mesh");
  ManifoldPtr conforming = mesh;
  std::vector<char> inside;

  auto classify = [&](auto&& predicate) {
    inside.assign(static_cast<std::size_t>(conforming->num_simplices()), 0);
    for (int i = 0; i < conforming->num_simplices(); ++i) {
      inside[static_cast<std::size_t>(i)] = predicate(conforming->centroid(i)) ? 1 : 0;
    }
  };
  auto halfspace = [&](const Point& normal, double offset) {
    const LinearCut cut{normal, offset, std::nullopt};
    if (mesh->intrinsic_dim() == 1) {
      conforming = std::make_shared<const SimplicialManifold>(cut_polyline(*mesh, std::span(&cut, 1)));
    } else {
      conforming = std::make_shared<const SimplicialManifold>(cut_triangles(*mesh, cut));
    }
    classify([&](const Point& c) { return cut.value(c) > 0.0; });
  };

  std::visit(
      [&](const auto& sel) {
        using T = std::decay_t<decltype(sel)>;
        if constexpr (std::is_same_v<T, ArcSelector>) {
          if (mesh->intrinsic_dim() != 1) throw GeometryError("arc selector requires a polyline (k = 1)");
          const double width = sel.end_angle - sel.begin_angle;
          if (!(width > 0.0)) throw GeometryError("empty selection: arc has non-positive angular width");
          if (width >= 2.0 * std::numbers::pi) throw GeometryError("selection covers the whole manifold (no boundary)");
          std::array<LinearCut, 2> cuts;
          for (int e = 0; e < 2; ++e) {
            const double th = e == 0 ? sel.begin_angle : sel.end_angle;
            const Point dir(std::cos(th), std::sin(th), 0.0);
            cuts[static_cast<std::size_t>(e)] = LinearCut{Point(-dir.y(), dir.x(), 0.0), 0.0, dir};
          }
          conforming = std::make_shared<const SimplicialManifold>(cut_polyline(*mesh, cuts));
          classify([&](const Point& c) {
            return wrap_angle(std::atan2(c.y(), c.x()) - sel.begin_angle) < width;
          });
        } else if constexpr (std::is_same_v<T, CapSelector>) {
          const double r = sel.center.norm();
          if (!(r > 0.0)) throw GeometryError("cap center must not be the origin");
          if (!(sel.radius > 0.0)) throw GeometryError("empty selection: cap radius must be positive");
          halfspace(sel.center / r, r * std::cos(sel.radius / r));
        } else if constexpr (std::is_same_v<T, HalfspaceSelector>) {
          const double len = sel.normal.norm();
          if (!(len > 0.0)) throw GeometryError("halfspace normal must be nonzero");
          halfspace(sel.normal / len, sel.offset / len);
        } else {
          inside.assign(static_cast<std::size_t>(mesh->num_simplices()), 0);
          for (int id : sel.simplices) {
            if (id < 0 || id >= mesh->num_simplices()) {
              throw GeometryError(fmt::format("selector references missing simplex {}", id));
            }
            inside[static_cast<std::size_t>(id)] = 1;
          }
        }
      },
      selector);

  const auto count = std::count(inside.begin(), inside.end(), 1);
  if (count == 0) throw GeometryError("empty selection");
  if (count == conforming->num_simplices()) {
    throw GeometryError("selection covers the whole manifold (no boundary)");
  }
  int components = 0;
  flood_components(*conforming, inside, components);
  if (components != 1) {
    throw GeometryError(fmt::format("disconnected selection ({} components)", components));
  }
  return Region(conforming, std::move(inside));
}

// ---------------------------------------------------------------------------
// Measures and distances

double measure(const Region& region) {
  double sum = 0.0;
  const auto& m = region.mesh();
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (region.contains(i)) sum += m.volume(i);
  }
  return sum;
}

double euclidean_distance(const Point& x, const Point& y) { return (x - y).norm(); }

double point_simplex_distance(const SimplicialManifold& mesh, int simplex, const Point& x) {
  const auto& s = mesh.simplex(simplex);
  if (mesh.intrinsic_dim() == 1) {
    return (closest_point_segment(x, mesh.vertex(s[0]), mesh.vertex(s[1])) - x).norm();
  }
  return (closest_point_triangle(x, mesh.vertex(s[0]), mesh.vertex(s[1]), mesh.vertex(s[2])) - x)
      .norm();
}

double simplex_simplex_distance(const SimplicialManifold& mesh, int a, int b) {
  const auto& sa = mesh.simplex(a);
  const auto& sb = mesh.simplex(b);
  if (mesh.intrinsic_dim() == 1) {
    return segment_segment_distance(mesh.vertex(sa[0]), mesh.vertex(sa[1]), mesh.vertex(sb[0]),
                                    mesh.vertex(sb[1]));
  }
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    best = std::min(best, point_simplex_distance(mesh, b, mesh.vertex(sa[static_cast<std::size_t>(j)])));
    best = std::min(best, point_simplex_distance(mesh, a, mesh.vertex(sb[static_cast<std::size_t>(j)])));
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      best = std::min(best, segment_segment_distance(
                                mesh.vertex(sa[static_cast<std::size_t>(i)]), mesh.vertex(sa[static_cast<std::size_t>((i + 1) % 3)]),
                                mesh.vertex(sb[static_cast<std::size_t>(j)]), mesh.vertex(sb[static_cast<std::size_t>((j + 1) % 3)])));
    }
  }
  return best;
}

double dist_to_set(const Point& x, const Region& target) {
  const auto& m = target.mesh();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (target.contains(i)) best = std::min(best, point_simplex_distance(m, i, x));
  }
  if (!std::isfinite(best)) throw GeometryError("dist_to_set: empty target");
  return best;
}

double dist_to_boundary(const Point& x, const Region& target) {
  const auto& m = target.mesh();
  double best = std::numeric_limits<double>::infinity();
  for (int v : target.boundary_points()) best = std::min(best, (m.vertex(v) - x).norm());
  for (const auto& seg : target.boundary_segments()) {
    best = std::min(best, (closest_point_segment(x, m.vertex(seg[0]), m.vertex(seg[1])) - x).norm());
  }
  if (!std::isfinite(best)) throw GeometryError("dist_to_boundary: region has no boundary");
  return best;
}

double dist_between(const Region& a, const Region& b) {
  if (a.mesh_ptr() != b.mesh_ptr()) throw GeometryError("dist_between: regions live on different meshes");
  const auto& m = a.mesh();
  const auto ia = a.simplex_ids();
  const auto ib = b.simplex_ids();
  if (ia.empty() || ib.empty()) throw GeometryError("dist_between: empty target");
  double best = std::numeric_limits<double>::infinity();
  for (int s : ia) {
    for (int t : ib) best = std::min(best, simplex_simplex_distance(m, s, t));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Dilation and refinement

SimplicialManifold dilate(const SimplicialManifold& mesh, double lambda) {
  if (!(lambda > 0.0)) throw GeometryError(fmt::format("dilate: lambda must be positive (got {})", lambda));
  std::vector<Point> verts;
  verts.reserve(static_cast<std::size_t>(mesh.num_vertices()));
  for (const auto& v : mesh.vertices()) verts.push_back(lambda * v);
  std::vector<Simplex> simplices(mesh.simplices().begin(), mesh.simplices().end());
  return SimplicialManifold::create_trusted(mesh.ambient_dim(), mesh.intrinsic_dim(), std::move(verts),
                                            std::move(simplices));
}

Region dilate(const Region& region, double lambda) {
  auto mesh = std::make_shared<const SimplicialManifold>(dilate(region.mesh(), lambda));
  return Region(std::move(mesh), std::vector<char>(region.mask().begin(), region.mask().end()));
}

Refinement refine(const SimplicialManifold& mesh) {
  Refinement out;
  std::vector<Point> verts(mesh.vertices().begin(), mesh.vertices().end());
  for (int i = 0; i < mesh.num_vertices(); ++i) out.vertex_parents.push_back({i, i});
  std::map<std::array<int, 2>, int> midpoints;
  auto midpoint = [&](int a, int b) {
    const auto key = sorted_pair(a, b);
    if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
    verts.push_back(0.5 * (verts[static_cast<std::size_t>(key[0])] + verts[static_cast<std::size_t>(key[1])]));
    out.vertex_parents.push_back(key);
    const int id = static_cast<int>(verts.size()) - 1;
    midpoints[key] = id;
    return id;
  };
  std::vector<Simplex> children;
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    const auto& s = mesh.simplex(i);
    if (mesh.intrinsic_dim() == 1) {
      const int m = midpoint(s[0], s[1]);
      children.push_back({s[0], m, -1});
      children.push_back({m, s[1], -1});
      out.parent_simplex.insert(out.parent_simplex.end(), 2, i);
    } else {
      const int ab = midpoint(s[0], s[1]);
      const int bc = midpoint(s[1], s[2]);
      const int ca = midpoint(s[2], s[0]);
      children.push_back({s[0], ab, ca});
      children.push_back({ab, s[1], bc});
      children.push_back({ca, bc, s[2]});
      children.push_back({ab, bc, ca});
      out.parent_simplex.insert(out.parent_simplex.end(), 4, i);
    }
  }
  out.mesh = std::make_shared<const SimplicialManifold>(SimplicialManifold::create_trusted(
      mesh.ambient_dim(), mesh.intrinsic_dim(), std::move(verts), std::move(children)));
  return out;
}

Region refine(const Region& region, const Refinement& refinement) {
  const auto& m = region.mesh();
  const std::size_t children = m.intrinsic_dim() == 1 ? 2 : 4;
  if (refinement.parent_simplex.size() != children * static_cast<std::size_t>(m.num_simplices())) {
    throw GeometryError("refine: refinement was not built from the region's mesh");
  }
  std::vector<char> inside(refinement.parent_simplex.size());
  for (std::size_t i = 0; i < inside.size(); ++i) {
    inside[i] = region.contains(refinement.parent_simplex[i]) ? 1 : 0;
  }
  return Region(refinement.mesh, std::move(inside));
}

}  // namespace fracsob::geometry
