#include "fracsob/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <fmt/format.h>

namespace fracsob::atlas {

namespace {

constexpr double kLocateTol = 1e-12;
constexpr double kMaxLiftGradient = 10.0;
constexpr int kDirections2d = 64;
constexpr std::size_t kMaxSamples = 600;

using Interval = std::pair<double, double>;

std::vector<int> incident_simplex(const SimplicialManifold& m) {
  std::vector<int> out(static_cast<std::size_t>(m.num_vertices()), -1);
  for (int i = 0; i < m.num_simplices(); ++i) {
    for (int j = 0; j < m.vertices_per_simplex(); ++j) {
      auto& slot = out[static_cast<std::size_t>(m.simplex(i)[j])];
      if (slot < 0) slot = i;
    }
  }
  return out;
}

// Ray r * d (r >= 0) clipped to a planar triangle; empty when r0 > r1.
Interval clip_ray_triangle(const std::array<Param, 3>& p, const Param& d) {
  double r0 = 0.0;
  double r1 = std::numeric_limits<double>::infinity();
  const double orient = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
  for (int e = 0; e < 3; ++e) {
    const Param a = p[e];
    const Param b = p[(e + 1) % 3];
    // Inward normal of edge a->b.
    Param n(-(b - a).y(), (b - a).x());
    if (orient < 0) n = -n;
    // n . (r d - a) >= 0
    const double num = -n.dot(a);
    const double den = n.dot(d);
    if (std::abs(den) < 1e-300) {
      if (num > 0) return {1.0, 0.0};
      continue;
    }
    const double r = -num / den;
    if (den > 0) {
      r0 = std::max(r0, r);
    } else {
      r1 = std::min(r1, r);
    }
  }
  return {r0, r1};
}

// Sub-interval of [r0, r1] where |base + r * dir - c| < eps.
std::optional<Interval> ball_interval(const Point& base, const Point& dir, const Point& c, double eps, double r0,
                                      double r1) {
  const Point w = base - c;
  const double a = dir.squaredNorm();
  const double b = 2.0 * dir.dot(w);
  const double cc = w.squaredNorm() - eps * eps;
  double lo = 0.0;
  double hi = 0.0;
  if (a == 0.0) {
    if (cc >= 0.0) return std::nullopt;
    lo = r0;
    hi = r1;
  } else {
    const double disc = b * b - 4.0 * a * cc;
    if (disc <= 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double x1 = q / a;
    double x2 = q != 0.0 ? cc / q : -x1;
    if (x1 > x2) std::swap(x1, x2);
    lo = std::max(r0, x1);
    hi = std::min(r1, x2);
  }
  if (!(hi > lo)) return std::nullopt;
  return Interval{lo, hi};
}

bool triangles_overlap(const std::array<Param, 3>& a, const std::array<Param, 3>& b, double tol) {
  auto separated = [&](const std::array<Param, 3>& s) {
    for (int e = 0; e < 3; ++e) {
      const Param edge = s[(e + 1) % 3] - s[e];
      const Param n(-edge.y(), edge.x());
      double amin = std::numeric_limits<double>::infinity();
      double amax = -amin;
      double bmin = amin;
      double bmax = -amin;
      for (int j = 0; j < 3; ++j) {
        amin = std::min(amin, n.dot(a[j]));
        amax = std::max(amax, n.dot(a[j]));
        bmin = std::min(bmin, n.dot(b[j]));
        bmax = std::max(bmax, n.dot(b[j]));
      }
      const double scale = tol * n.norm();
      if (amax <= bmin + scale || bmax <= amin + scale) return true;
    }
    return false;
  };
  return !separated(a) && !separated(b);
}

struct Patch {
  std::vector<int> simplices;
};

Patch find_patch(const SimplicialManifold& m, const SurfacePoint& x, double eps) {
  const int n = m.num_simplices();
  std::vector<char> near(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    if ((m.centroid(i) - x.position).norm() - m.simplex_diameter(i) >= eps) continue;
    near[i] = geometry::point_simplex_distance(m, i, x.position) < eps ? 1 : 0;
  }
  if (x.simplex < 0 || x.simplex >= n || !near[x.simplex]) {
    throw AtlasError(fmt::format("chart center does not lie on simplex {}", x.simplex));
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack{x.simplex};
  seen[x.simplex] = 1;
  Patch patch;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    patch.simplices.push_back(s);
    for (int j = 0; j < m.vertices_per_simplex(); ++j) {
      const int t = m.neighbors(s)[j];
      if (t >= 0 && near[t] && !seen[t]) {
        seen[t] = 1;
        stack.push_back(t);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (near[i] && !seen[i]) {
      throw AtlasError(fmt::format("disconnected patch: simplex {} meets the ball but is not connected to the center", i));
    }
  }
  if (static_cast<int>(patch.simplices.size()) == n) {
    throw AtlasError(fmt::format("patch around simplex {} covers the whole manifold", x.simplex));
  }
  std::sort(patch.simplices.begin(), patch.simplices.end());
  return patch;
}

std::vector<ChartPiece> arc_pieces(const SimplicialManifold& m, const SurfacePoint& x, const Patch& patch) {
  std::map<int, std::vector<int>> by_vertex;
  for (int s : patch.simplices) {
    by_vertex[m.simplex(s)[0]].push_back(s);
    by_vertex[m.simplex(s)[1]].push_back(s);
  }
  std::vector<ChartPiece> pieces;
  const auto& c = m.simplex(x.simplex);
  const Point a = m.vertex(c[0]);
  const Point b = m.vertex(c[1]);
  const double ta = -(x.position - a).norm();
  const double tb = (b - x.position).norm();
  pieces.push_back({x.simplex, {Param(ta, 0), Param(tb, 0), Param(tb, 0)}, {a, b, b}});

  auto walk = [&](int from_vertex, double t, double sign) {
    int prev = x.simplex;
    int v = from_vertex;
    for (;;) {
      int next = -1;
      for (int s : by_vertex[v]) {
        if (s != prev) next = s;
      }
      if (next < 0) return;
      const auto& sv = m.simplex(next);
      const int w = sv[0] == v ? sv[1] : sv[0];
      const double tw = t + sign * (m.vertex(w) - m.vertex(v)).norm();
      ChartPiece piece;
      piece.simplex = next;
      if (sv[0] == v) {
        piece.param = {Param(t, 0), Param(tw, 0), Param(tw, 0)};
        piece.position = {m.vertex(v), m.vertex(w), m.vertex(w)};
      } else {
        piece.param = {Param(tw, 0), Param(t, 0), Param(t, 0)};
        piece.position = {m.vertex(w), m.vertex(v), m.vertex(v)};
      }
      pieces.push_back(piece);
      prev = next;
      v = w;
      t = tw;
    }
  };
  walk(c[1], tb, 1.0);
  walk(c[0], ta, -1.0);
  return pieces;
}

std::vector<ChartPiece> plane_pieces(const SimplicialManifold& m, const SurfacePoint& x, const Patch& patch,
                                     double eps) {
  std::vector<int> verts;
  for (int s : patch.simplices) {
    for (int j = 0; j < 3; ++j) verts.push_back(m.simplex(s)[j]);
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  Point mean = Point::Zero();
  for (int v : verts) mean += m.vertex(v);
  mean /= static_cast<double>(verts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int v : verts) {
    const Point d = m.vertex(v) - mean;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  Point n = eig.eigenvectors().col(0);
  const auto& cs = m.simplex(x.simplex);
  const Point cn = (m.vertex(cs[1]) - m.vertex(cs[0])).cross(m.vertex(cs[2]) - m.vertex(cs[0]));
  if (n.dot(cn) < 0) n = -n;
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  Point e1 = Point::Unit(axis) - n[axis] * n;
  e1.normalize();
  const Point e2 = n.cross(e1);

  std::vector<ChartPiece> pieces;
  for (int s : patch.simplices) {
    ChartPiece piece;
    piece.simplex = s;
    for (int j = 0; j < 3; ++j) {
      piece.position[j] = m.vertex(m.simplex(s)[j]);
      const Point d = piece.position[j] - x.position;
      piece.param[j] = Param(e1.dot(d), e2.dot(d));
    }
    const Point tn = (piece.position[1] - piece.position[0]).cross(piece.position[2] - piece.position[0]);
    const double cosine = tn.normalized().dot(n);
    if (!(cosine > 0.0)) throw AtlasError(fmt::format("projection fold-over at simplex {}", s));
    const double gradient = std::sqrt(std::max(0.0, 1.0 - cosine * cosine)) / cosine;
    if (gradient > kMaxLiftGradient) {
      throw AtlasError(fmt::format("lift gradient {:.3g} exceeds {} at simplex {}", gradient, kMaxLiftGradient, s));
    }
    pieces.push_back(piece);
  }
  // Projected triangles that share no vertex must not overlap.
  const double tol = 1e-12 * eps;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Eigen::AlignedBox2d bi;
    for (const auto& p : pieces[i].param) bi.extend(p);
    const auto& si = m.simplex(pieces[i].simplex);
    for (std::size_t j = i + 1; j < pieces.size(); ++j) {
      const auto& sj = m.simplex(pieces[j].simplex);
      bool shared = false;
      for (int a = 0; a < 3 && !shared; ++a) {
        for (int b = 0; b < 3; ++b) shared = shared || si[a] == sj[b];
      }
      if (shared) continue;
      Eigen::AlignedBox2d bj;
      for (const auto& p : pieces[j].param) bj.extend(p);
      if (!bi.intersects(bj)) continue;
      if (triangles_overlap(pieces[i].param, pieces[j].param, tol)) {
        throw AtlasError(fmt::format("projection is not injective: simplices {} and {} overlap", pieces[i].simplex,
                                     pieces[j].simplex));
      }
    }
  }
  return pieces;
}

std::vector<Interval> merge(std::vector<Interval> parts, double tol) {
  std::sort(parts.begin(), parts.end());
  std::vector<Interval> out;
  for (const auto& p : parts) {
    if (!out.empty() && p.first <= out.back().second + tol) {
      out.back().second = std::max(out.back().second, p.second);
    } else {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

class ChartFactory {
 public:
  static Chart build(const ManifoldPtr& mesh, const SurfacePoint& x, double eps, bool metrics);
};

// ---------------------------------------------------------------------------
// Chart

std::optional<Location> Chart::locate(const Param& yhat) const { return locate_in(yhat, {}); }

std::optional<Location> Chart::locate_in(const Param& yhat, std::span<const char> mask) const {
  std::optional<Location> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& pc = pieces_[i];
    if (!mask.empty() && !mask[static_cast<std::size_t>(pc.simplex)]) continue;
    std::array<double, 3> bary{};
    if (k_ == 1) {
      const double t0 = pc.param[0].x();
      const double t1 = pc.param[1].x();
      const double b1 = (yhat.x() - t0) / (t1 - t0);
      bary = {1.0 - b1, b1, 0.0};
    } else {
      const Param e1 = pc.param[1] - pc.param[0];
      const Param e2 = pc.param[2] - pc.param[0];
      const Param d = yhat - pc.param[0];
      const double det = e1.x() * e2.y() - e1.y() * e2.x();
      const double b1 = (d.x() * e2.y() - d.y() * e2.x()) / det;
      const double b2 = (e1.x() * d.y() - e1.y() * d.x()) / det;
      bary = {1.0 - b1 - b2, b1, b2};
    }
    const double mn = k_ == 1 ? std::min(bary[0], bary[1]) : std::min({bary[0], bary[1], bary[2]});
    if (mn >= -kLocateTol && mn > best_min) {
      best_min = mn;
      Location loc;
      loc.piece = static_cast<int>(i);
      loc.bary = bary;
      loc.position = Point::Zero();
      for (int j = 0; j <= k_; ++j) loc.position += bary[j] * pc.position[j];
      best = loc;
    }
  }
  return best;
}

std::optional<Point> Chart::forward(const Param& yhat) const {
  const auto loc = locate(yhat);
  if (!loc) return std::nullopt;
  return loc->position;
}

Param Chart::inverse(const Point& y, int piece) const {
  const auto& pc = pieces_.at(static_cast<std::size_t>(piece));
  if (k_ == 1) {
    const Point e = pc.position[1] - pc.position[0];
    const double b1 = (y - pc.position[0]).dot(e) / e.squaredNorm();
    return Param(pc.param[0].x() + b1 * (pc.param[1].x() - pc.param[0].x()), 0.0);
  }
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = pc.position[1] - pc.position[0];
  a.col(1) = pc.position[2] - pc.position[0];
  const Eigen::Vector2d b = (a.transpose() * a).ldlt().solve(a.transpose() * (y - pc.position[0]));
  return pc.param[0] + b.x() * (pc.param[1] - pc.param[0]) + b.y() * (pc.param[2] - pc.param[0]);
}

int Chart::piece_of(int simplex) const {
  if (simplex < 0 || simplex >= static_cast<int>(piece_by_simplex_.size())) return -1;
  return piece_by_simplex_[simplex];
}

bool Chart::in_domain(const Param& yhat) const {
  const auto p = forward(yhat);
  return p && (*p - center_).norm() < radius_;
}

Eigen::Matrix<double, 3, 2> Chart::piece_differential(int piece) const {
  const auto& pc = pieces_.at(static_cast<std::size_t>(piece));
  Eigen::Matrix<double, 3, 2> d = Eigen::Matrix<double, 3, 2>::Zero();
  if (k_ == 1) {
    d.col(0) = (pc.position[1] - pc.position[0]) / (pc.param[1].x() - pc.param[0].x());
    return d;
  }
  Eigen::Matrix2d e;
  e.col(0) = pc.param[1] - pc.param[0];
  e.col(1) = pc.param[2] - pc.param[0];
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = pc.position[1] - pc.position[0];
  a.col(1) = pc.position[2] - pc.position[0];
  return a * e.inverse();
}

std::vector<Param> Chart::sample_directions() const {
  if (k_ == 1) return {Param(1, 0), Param(-1, 0)};
  std::vector<Param> dirs;
  for (int i = 0; i < kDirections2d; ++i) {
    const double th = 2.0 * std::numbers::pi * i / kDirections2d;
    dirs.emplace_back(std::cos(th), std::sin(th));
  }
  return dirs;
}

std::pair<double, double> Chart::exit_radii(const Param& direction) const {
  std::vector<Interval> parts;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& pc = pieces_[i];
    Interval span;
    if (k_ == 1) {
      const double t0 = std::min(pc.param[0].x(), pc.param[1].x());
      const double t1 = std::max(pc.param[0].x(), pc.param[1].x());
      if (direction.x() > 0) {
        span = {std::max(0.0, t0), t1};
      } else {
        span = {std::max(0.0, -t1), -t0};
      }
    } else {
      span = clip_ray_triangle(pc.param, direction);
    }
    if (!(span.second > span.first)) continue;
    const auto d = piece_differential(static_cast<int>(i));
    const Point base = pc.position[0] - d * pc.param[0];
    const Point dir = d * direction;
    if (auto in = ball_interval(base, dir, center_, radius_, span.first, span.second)) parts.push_back(*in);
  }
  const auto merged = merge(parts, 1e-12 * radius_);
  double first = 0.0;
  double last = 0.0;
  for (const auto& iv : merged) {
    if (iv.first <= 1e-12 * radius_) first = iv.second;
    last = std::max(last, iv.second);
  }
  return {first, last};
}

void Chart::compute_metrics() {
  ChartMetrics mt;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto d = piece_differential(static_cast<int>(i));
    double smax = 0.0;
    double smin = 0.0;
    double jac = 0.0;
    if (k_ == 1) {
      smax = smin = jac = d.col(0).norm();
    } else {
      const Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(d);
      smax = svd.singularValues()(0);
      smin = svd.singularValues()(1);
      jac = smax * smin;
    }
    mt.piece_lipschitz = std::max(mt.piece_lipschitz, smax);
    mt.piece_inverse_lipschitz = std::max(mt.piece_inverse_lipschitz, 1.0 / smin);
    mt.jacobian = std::max(mt.jacobian, jac);
    mt.inverse_jacobian = std::max(mt.inverse_jacobian, 1.0 / jac);
  }

  // Pairwise ratios over vertices, centroids, the center and boundary exits.
  std::vector<Param> params{Param::Zero()};
  std::vector<Point> points{center_};
  for (const auto& pc : pieces_) {
    Param cp = Param::Zero();
    Point cx = Point::Zero();
    for (int j = 0; j <= k_; ++j) {
      params.push_back(pc.param[j]);
      points.push_back(pc.position[j]);
      cp += pc.param[j] / (k_ + 1);
      cx += pc.position[j] / (k_ + 1);
    }
    params.push_back(cp);
    points.push_back(cx);
  }
  for (const auto& dir : sample_directions()) {
    const auto [first, last] = exit_radii(dir);
    for (double r : {first, last}) {
      if (r <= 0.0) continue;
      if (auto p = forward(r * dir)) {
        params.push_back(r * dir);
        points.push_back(*p);
      }
    }
  }
  const std::size_t stride = params.size() > kMaxSamples ? (params.size() + kMaxSamples - 1) / kMaxSamples : 1;
  std::vector<std::size_t> pick;
  for (std::size_t i = 0; i < params.size(); i += stride) pick.push_back(i);
  const double floor = 1e-9 * radius_;
  for (std::size_t a = 0; a < pick.size(); ++a) {
    for (std::size_t b = a + 1; b < pick.size(); ++b) {
      const double dp = (params[pick[a]] - params[pick[b]]).norm();
      const double dx = (points[pick[a]] - points[pick[b]]).norm();
      if (dp < floor || dx < floor) continue;
      mt.sampled_lipschitz = std::max(mt.sampled_lipschitz, dx / dp);
      mt.sampled_inverse_lipschitz = std::max(mt.sampled_inverse_lipschitz, dp / dx);
    }
  }
  mt.lipschitz = std::max(mt.piece_lipschitz, mt.sampled_lipschitz);
  mt.inverse_lipschitz = std::max(mt.piece_inverse_lipschitz, mt.sampled_inverse_lipschitz);
  metrics_ = mt;
}

Chart Chart::dilated(double lambda) const {
  if (!(lambda > 0.0)) throw AtlasError(fmt::format("dilation factor must be positive (got {})", lambda));
  Chart out = *this;
  out.center_ = lambda * center_;
  out.radius_ = lambda * radius_;
  for (auto& pc : out.pieces_) {
    for (auto& p : pc.position) p *= lambda;
  }
  out.compute_metrics();
  return out;
}

Chart ChartFactory::build(const ManifoldPtr& mesh, const SurfacePoint& x, double eps, bool metrics) {
  if (!(eps > 0.0)) throw AtlasError(fmt::format("chart radius must be positive (got {})", eps));
  const auto& m = *mesh;
  const auto patch = find_patch(m, x, eps);
  Chart chart;
  chart.k_ = m.intrinsic_dim();
  chart.center_ = x.position;
  chart.radius_ = eps;
  chart.center_simplex_ = x.simplex;
  chart.pieces_ = chart.k_ == 1 ? arc_pieces(m, x, patch) : plane_pieces(m, x, patch, eps);
  chart.piece_by_simplex_.assign(static_cast<std::size_t>(m.num_simplices()), -1);
  for (std::size_t i = 0; i < chart.pieces_.size(); ++i) chart.piece_by_simplex_[chart.pieces_[i].simplex] = static_cast<int>(i);
  if (chart.k_ == 1) {
    // The ball must meet the arc in one interval around the center.
    std::vector<Interval> parts;
    for (std::size_t i = 0; i < chart.pieces_.size(); ++i) {
      const auto& pc = chart.pieces_[i];
      const double t0 = pc.param[0].x();
      const double t1 = pc.param[1].x();
      const Point dir = (pc.position[1] - pc.position[0]) / (t1 - t0);
      const Point base = pc.position[0] - t0 * dir;
      if (auto in = ball_interval(base, dir, x.position, eps, std::min(t0, t1), std::max(t0, t1))) {
        parts.push_back(*in);
      }
    }
    const auto merged = merge(parts, 1e-12 * eps);
    if (merged.size() != 1) {
      throw AtlasError(fmt::format("ball meets the arc in {} pieces around simplex {}", merged.size(), x.simplex));
    }
  }
  if (metrics) chart.compute_metrics();
  return chart;
}

Chart build_chart(const ManifoldPtr& mesh, const SurfacePoint& x, double eps) {
  return ChartFactory::build(mesh, x, eps, true);
}

SurfacePoint vertex_point(const SimplicialManifold& mesh, int vertex) {
  for (int i = 0; i < mesh.num_simplices(); ++i) {
    for (int j = 0; j < mesh.vertices_per_simplex(); ++j) {
      if (mesh.simplex(i)[j] == vertex) return {mesh.vertex(vertex), i};
    }
  }
  throw AtlasError(fmt::format("vertex {} belongs to no simplex", vertex));
}

double select_epsilon(const ManifoldPtr& mesh) {
  const auto& m = *mesh;
  const auto incident = incident_simplex(m);
  for (int j = 0; j <= 20; ++j) {
    const double eps = m.diameter() * std::ldexp(1.0, -j);
    bool ok = true;
    for (int v = 0; v < m.num_vertices() && ok; ++v) {
      try {
        ChartFactory::build(mesh, {m.vertex(v), incident[v]}, eps, false);
      } catch (const AtlasError&) {
        ok = false;
      }
    }
    if (ok) return eps;
  }
  throw AtlasError("manifold too irregular at mesh scale: no chart radius down to diam * 2^-20 works");
}

std::vector<Chart> build_atlas(const ManifoldPtr& mesh, double eps) {
  const auto incident = incident_simplex(*mesh);
  std::vector<Chart> charts;
  charts.reserve(static_cast<std::size_t>(mesh->num_vertices()));
  for (int v = 0; v < mesh->num_vertices(); ++v) charts.push_back(build_chart(mesh, {mesh->vertex(v), incident[v]}, eps));
  return charts;
}

ChartConstants estimate_constants(const std::vector<Chart>& charts) {
  if (charts.empty()) throw AtlasError("estimate_constants: no charts");
  ChartConstants c;
  for (const auto& ch : charts) {
    const auto& mt = ch.metrics();
    c.L = std::max(c.L, mt.lipschitz);
    c.L_hat = std::max(c.L_hat, mt.inverse_lipschitz);
    c.J = std::max(c.J, mt.jacobian);
    c.J_hat = std::max(c.J_hat, mt.inverse_jacobian);
  }
  return c;
}

InclusionReport verify_inclusions(const Chart& chart) {
  return verify_inclusions(chart, chart.metrics().lipschitz, chart.metrics().inverse_lipschitz);
}

InclusionReport verify_inclusions(const Chart& chart, double lipschitz, double inverse_lipschitz) {
  double min_first = std::numeric_limits<double>::infinity();
  double max_last = 0.0;
  for (const auto& dir : chart.sample_directions()) {
    const auto [first, last] = chart.exit_radii(dir);
    min_first = std::min(min_first, first);
    max_last = std::max(max_last, last);
  }
  InclusionReport r;
  r.inner_margin = min_first - chart.radius() / lipschitz;
  r.outer_margin = chart.radius() * inverse_lipschitz - max_last;
  const double tol = -1e-12 * chart.radius();
  r.inner_ok = r.inner_margin >= tol;
  r.outer_ok = r.outer_margin >= tol;
  return r;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw AtlasError("fit_slope needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw AtlasError("fit_slope: x values are all equal");
  return sxy / sxx;
}

ScalingStudy scaling_study(const std::vector<Chart>& charts, const Region& omega, const std::vector<double>& lambdas) {
  if (lambdas.size() < 2) throw AtlasError("scaling_study needs at least two dilation factors");
  const int k = omega.mesh().intrinsic_dim();
  const double base = geometry::measure(omega);
  ScalingStudy study;
  std::vector<double> lx, l1, l2, l3, l4;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0)) throw AtlasError(fmt::format("dilation factor must be positive (got {})", lambda));
    std::vector<Chart> scaled;
    scaled.reserve(charts.size());
    for (const auto& c : charts) scaled.push_back(c.dilated(lambda));
    ScalingRow row;
    row.lambda = lambda;
    row.measure = std::pow(lambda, k) * base;
    row.constants = estimate_constants(scaled);
    lx.push_back(std::log(row.measure));
    l1.push_back(std::log(row.constants.L));
    l2.push_back(std::log(row.constants.L_hat));
    l3.push_back(std::log(row.constants.J));
    l4.push_back(std::log(row.constants.J_hat));
    study.rows.push_back(row);
  }
  study.slope_L = fit_slope(lx, l1);
  study.slope_L_hat = fit_slope(lx, l2);
  study.slope_J = fit_slope(lx, l3);
  study.slope_J_hat = fit_slope(lx, l4);
  return study;
}

// ---------------------------------------------------------------------------
// Cover and partition of unity

BoundaryCover build_cover(const Region& omega, double eps) {
  if (!(eps > 0.0)) throw AtlasError(fmt::format("cover radius must be positive (got {})", eps));
  const auto& m = omega.mesh();
  if (omega.is_whole()) throw AtlasError("build_cover: region has an empty boundary");
  std::vector<SurfacePoint> samples;
  double spacing = 0.0;
  if (m.intrinsic_dim() == 1) {
    for (int v : omega.boundary_points()) {
      int owner = -1;
      for (int i = 0; i < m.num_simplices() && owner < 0; ++i) {
        if (omega.contains(i) && (m.simplex(i)[0] == v || m.simplex(i)[1] == v)) owner = i;
      }
      samples.push_back({m.vertex(v), owner});
    }
  } else {
    std::map<std::pair<int, int>, int> owner;
    for (int i = 0; i < m.num_simplices(); ++i) {
      if (!omega.contains(i)) continue;
      const auto& s = m.simplex(i);
      for (int e = 0; e < 3; ++e) {
        const int a = s[e];
        const int b = s[(e + 1) % 3];
        owner[{std::min(a, b), std::max(a, b)}] = i;
      }
    }
    const double step = eps / 64.0;
    for (const auto& seg : omega.boundary_segments()) {
      const int simplex = owner.at({std::min(seg[0], seg[1]), std::max(seg[0], seg[1])});
      const Point a = m.vertex(seg[0]);
      const Point b = m.vertex(seg[1]);
      const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
      spacing = std::max(spacing, (b - a).norm() / n);
      for (int j = 0; j < n; ++j) samples.push_back({a + (static_cast<double>(j) / n) * (b - a), simplex});
    }
  }
  if (samples.empty()) throw AtlasError("build_cover: region has an empty boundary");

  // Greedy farthest-point net on the boundary samples.
  const double net = 0.25 * eps - 0.5 * spacing;
  BoundaryCover cover{omega, eps, {}};
  std::vector<double> dist(samples.size(), std::numeric_limits<double>::infinity());
  std::size_t pick = 0;
  for (;;) {
    cover.centers.push_back(samples[pick]);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      dist[i] = std::min(dist[i], (samples[i].position - samples[pick].position).norm());
    }
    const auto far = std::max_element(dist.begin(), dist.end());
    if (*far <= net) break;
    pick = static_cast<std::size_t>(far - dist.begin());
  }

  // Covering check at vertices and quadrature nodes of the closure of omega.
  const auto& rule = quadrature::simplex_rule(m.intrinsic_dim(), 3);
  auto check = [&](const SurfacePoint& p) {
    const auto d = cutoff_values(cover, p);
    double sum = 0.0;
    for (double v : d) sum += v;
    if (!(sum > 0.0)) {
      throw AtlasError(fmt::format("cover misses the node ({:.6g}, {:.6g}, {:.6g}) on simplex {}", p.position.x(),
                                   p.position.y(), p.position.z(), p.simplex));
    }
  };
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (!omega.contains(i)) continue;
    for (int j = 0; j < m.vertices_per_simplex(); ++j) check({m.vertex(m.simplex(i)[j]), i});
    for (const auto& b : rule.bary) check({m.interpolate(i, b), i});
  }
  return cover;
}

namespace {

std::vector<double> raw_cutoffs(const BoundaryCover& cover, const Point& x, bool in_closure) {
  std::vector<double> d(cover.centers.size() + 1, 0.0);
  const double eps = cover.epsilon;
  if (in_closure) {
    const double dist = geometry::dist_to_boundary(x, cover.omega);
    d[0] = std::clamp(4.0 * dist / eps - 1.0, 0.0, 1.0);
  }
  for (std::size_t i = 0; i < cover.centers.size(); ++i) {
    d[i + 1] = std::max(0.0, 1.0 - (x - cover.centers[i].position).norm() / eps);
  }
  return d;
}

void normalize(std::vector<double>& d) {
  double sum = 0.0;
  for (double v : d) sum += v;
  const double denom = std::max(sum, 0.25);
  for (double& v : d) v /= denom;
}

}  // namespace

std::vector<double> cutoff_values(const BoundaryCover& cover, const SurfacePoint& x) {
  auto d = raw_cutoffs(cover, x.position, cover.omega.contains(x.simplex));
  normalize(d);
  return d;
}

PartitionOfUnity partition_of_unity(const BoundaryCover& cover) {
  const auto& m = cover.omega.mesh();
  const std::size_t nv = static_cast<std::size_t>(m.num_vertices());
  const std::size_t nc = cover.centers.size() + 1;
  std::vector<std::vector<double>> values(nc, std::vector<double>(nv, 0.0));
  for (int v = 0; v < m.num_vertices(); ++v) {
    auto d = raw_cutoffs(cover, m.vertex(v), cover.omega.contains_vertex(v));
    double sum = 0.0;
    for (double x : d) sum += x;
    if (cover.omega.contains_vertex(v) && !(sum > 0.0)) {
      throw AtlasError(fmt::format("partition of unity: zero denominator at vertex {}", v));
    }
    normalize(d);
    for (std::size_t i = 0; i < nc; ++i) values[i][v] = d[i];
  }

  PartitionOfUnity pu;
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& val = values[i];
    double lip = 0.0;
    for (int s = 0; s < m.num_simplices(); ++s) {
      const auto& sv = m.simplex(s);
      if (m.intrinsic_dim() == 1) {
        lip = std::max(lip, std::abs(val[sv[1]] - val[sv[0]]) / m.volume(s));
      } else {
        Eigen::Matrix<double, 3, 2> a;
        a.col(0) = m.vertex(sv[1]) - m.vertex(sv[0]);
        a.col(1) = m.vertex(sv[2]) - m.vertex(sv[0]);
        const Eigen::Vector2d du(val[sv[1]] - val[sv[0]], val[sv[2]] - val[sv[0]]);
        // Gradient g in the triangle plane with a^T g = du.
        const Eigen::Vector2d coef = (a.transpose() * a).ldlt().solve(du);
        lip = std::max(lip, (a * coef).norm());
      }
    }
    std::vector<int> support;
    for (int v = 0; v < m.num_vertices(); ++v) {
      if (val[v] > 0.0) support.push_back(v);
    }
    const std::size_t stride = support.size() > kMaxSamples ? (support.size() + kMaxSamples - 1) / kMaxSamples : 1;
    for (std::size_t a = 0; a < support.size(); a += stride) {
      for (int b = 0; b < m.num_vertices(); b += static_cast<int>(stride)) {
        const int va = support[a];
        if (b == va) continue;
        const double dx = (m.vertex(va) - m.vertex(b)).norm();
        if (dx > 0.0) lip = std::max(lip, std::abs(val[va] - val[b]) / dx);
      }
    }
    pu.psi.push_back(sobolev::ScalarField::on_manifold(cover.omega.mesh_ptr(), val));
    pu.lipschitz.push_back(lip);
  }
  return pu;
}

}  // namespace fracsob::atlas
