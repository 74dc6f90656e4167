#include "fracsob/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

namespace fracsob::extension {

namespace {

using atlas::ChartPiece;
using atlas::Param;
using geometry::Point;
using quadrature::Cell;
using quadrature::RowSum;

constexpr double kVanishTol = 1e-12;
constexpr double kRoundingSlack = 1e-12;
constexpr double kMaxGraphSlope = 10.0;
constexpr int kCheckOrder = 3;
constexpr int kBisectionSteps = 60;
constexpr double kChartReach = 2.0;

/// Allowance for checks that are equalities in exact arithmetic (isometric charts, psi = 1).
double rounding_margin(double lhs, double rhs) {
  return 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(lhs) + std::abs(rhs));
}

double abs_pow(double x, double p) {
  const double a = std::abs(x);
  if (p == 2.0) return a * a;
  if (p == 4.0) return (a * a) * (a * a);
  return std::pow(a, p);
}

Cell field_cell(const geometry::SimplicialManifold& m, int simplex, std::span<const double> values) {
  const auto& sv = m.simplex(simplex);
  const int k = m.intrinsic_dim();
  std::array<Point, 3> x{};
  std::array<double, 3> u{};
  for (int j = 0; j <= k; ++j) {
    x[j] = m.vertex(sv[j]);
    u[j] = values[static_cast<std::size_t>(sv[j])];
  }
  return quadrature::make_cell(k, x, u);
}

/// int int kernel over cells x cells, every ordered pair once.
template <typename Kernel>
RowSum all_pairs(const std::vector<Cell>& cells, const Kernel& kernel, const QuadratureSpec& q) {
  const quadrature::PairIntegrator<Kernel> integrator(kernel, q);
  const int n = static_cast<int>(cells.size());
  return quadrature::deterministic_sum(
      n,
      [&](int i) {
        RowSum row = integrator.self(cells[i]);
        for (int j = i + 1; j < n; ++j) {
          const RowSum r = integrator.pair(cells[i], cells[j]);
          row.value += 2.0 * r.value;
          row.error += 2.0 * std::abs(r.error);
        }
        row.error = std::abs(row.error);
        return row;
      },
      q.workers);
}

/// |u(x)|^p |x - y|^{-e}, symmetrized so that pair sums can be doubled.
struct WeightedDistanceKernel {
  int k = 1;
  double p = 2.0;
  double exponent = 0.0;
  int dim() const { return k; }
  double operator()(const Point& x, double ux, const Point& y, double uy) const {
    const double r = (x - y).norm();
    return 0.5 * (abs_pow(ux, p) + abs_pow(uy, p)) * std::pow(r, -exponent);
  }
  std::optional<double> self(const Cell&) const { return std::nullopt; }
};

struct Node {
  Point x;
  double w = 0.0;
  double u = 0.0;
};

std::vector<Node> region_nodes(const ScalarField& u, const Region& region, int order) {
  const auto& m = region.mesh();
  const auto& rule = quadrature::simplex_rule(m.intrinsic_dim(), order);
  std::vector<Node> out;
  for (int s = 0; s < m.num_simplices(); ++s) {
    if (!region.contains(s)) continue;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      out.push_back({m.interpolate(s, rule.bary[q]), rule.weights[q] * m.volume(s), u.evaluate(s, rule.bary[q])});
    }
  }
  return out;
}

double weighted_sum(const std::vector<Node>& nodes, double p) {
  std::vector<double> parts;
  parts.reserve(nodes.size());
  for (const auto& n : nodes) parts.push_back(n.w * abs_pow(n.u, p));
  return quadrature::pairwise_sum(parts);
}

/// Far-field double sum of |u(x)|^p |x - y|^{-e} over node pairs with |x - y| >= eps, and the
/// largest node distance.
std::pair<double, double> far_field(const std::vector<Node>& nodes, double eps, double exponent, double p,
                                    int workers) {
  const int n = static_cast<int>(nodes.size());
  const RowSum sum = quadrature::deterministic_sum(
      n,
      [&](int i) {
        const auto& xi = nodes[static_cast<std::size_t>(i)];
        double row = 0.0;
        for (const auto& y : nodes) {
          const double r = (xi.x - y.x).norm();
          if (r >= eps) row += y.w * std::pow(r, -exponent);
        }
        return RowSum{xi.w * abs_pow(xi.u, p) * row, 0.0};
      },
      workers);
  double reach = 0.0;
  for (const auto& a : nodes) {
    for (const auto& b : nodes) reach = std::max(reach, (a.x - b.x).norm());
  }
  return {sum.value, reach};
}

/// Closest point to `y` on segment [a, b].
Param closest_on_segment(const Param& y, const Param& a, const Param& b) {
  const Param d = b - a;
  const double len2 = d.squaredNorm();
  if (!(len2 > 0.0)) return a;
  const double t = std::clamp((y - a).dot(d) / len2, 0.0, 1.0);
  return a + t * d;
}

double point_segment_distance(const Point& y, const Point& a, const Point& b) {
  const Point d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((y - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (y - (a + t * d)).norm();
}

/// Boundary of omega inside a k = 2 chart as the graph b = gamma(a) in rotated coordinates.
class BoundaryGraph {
 public:
  BoundaryGraph(const Chart& chart, const Region& omega, std::span<const std::optional<Param>> params) {
    const auto& m = omega.mesh();
    std::vector<std::array<Param, 2>> segs;
    for (const auto& sg : omega.boundary_segments()) {
      const auto& pa = params[static_cast<std::size_t>(sg[0])];
      const auto& pb = params[static_cast<std::size_t>(sg[1])];
      if (!pa || !pb) continue;
      if (point_segment_distance(chart.center(), m.vertex(sg[0]), m.vertex(sg[1])) >= chart.radius()) continue;
      segs.push_back({*pa, *pb});
    }
    if (segs.empty()) throw ExtensionError("chart_extend: no boundary of omega inside the chart");

    Param mean = Param::Zero();
    for (const auto& s : segs) mean += s[0] + s[1];
    mean /= static_cast<double>(2 * segs.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& s : segs) {
      for (const auto& q : s) cov += (q - mean) * (q - mean).transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    tau_ = eig.eigenvectors().col(1).normalized();
    if (tau_.x() < 0.0 || (tau_.x() == 0.0 && tau_.y() < 0.0)) tau_ = -tau_;
    nu_ = Param(-tau_.y(), tau_.x());

    const double scale = chart.radius();
    for (const auto& s : segs) {
      double a0 = tau_.dot(s[0]);
      double a1 = tau_.dot(s[1]);
      double b0 = nu_.dot(s[0]);
      double b1 = nu_.dot(s[1]);
      if (a1 < a0) {
        std::swap(a0, a1);
        std::swap(b0, b1);
      }
      if (!(a1 - a0 > 1e-12 * scale)) {
        throw ExtensionError(fmt::format(
            "chart_extend: boundary is not a graph (segment orthogonal to the least-squares direction) in chart at "
            "({:.6g}, {:.6g}, {:.6g})",
            chart.center().x(), chart.center().y(), chart.center().z()));
      }
      pieces_.push_back({a0, a1, b0, b1});
      lipschitz_ = std::max(lipschitz_, std::abs(b1 - b0) / (a1 - a0));
    }
    std::sort(pieces_.begin(), pieces_.end(), [](const auto& x, const auto& y) { return x.a0 < y.a0; });
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      if (pieces_[i].a0 < pieces_[i - 1].a1 - 1e-12 * scale) {
        throw ExtensionError(fmt::format(
            "chart_extend: boundary is not a graph (overlapping segments) in chart at ({:.6g}, {:.6g}, {:.6g})",
            chart.center().x(), chart.center().y(), chart.center().z()));
      }
    }
    if (lipschitz_ > kMaxGraphSlope) {
      throw ExtensionError(fmt::format("chart_extend: boundary graph slope {:.3g} exceeds {}", lipschitz_,
                                       kMaxGraphSlope));
    }
  }

  const Param& tau() const { return tau_; }
  const Param& nu() const { return nu_; }
  double lipschitz() const { return lipschitz_; }

  std::optional<double> gamma(double a) const {
    for (const auto& s : pieces_) {
      if (a >= s.a0 && a <= s.a1) return s.b0 + (a - s.a0) / (s.a1 - s.a0) * (s.b1 - s.b0);
    }
    return std::nullopt;
  }

  /// Nearest point of the boundary curve to y.
  Param nearest(const Param& y) const {
    Param best = Param::Zero();
    double dbest = std::numeric_limits<double>::infinity();
    for (const auto& s : pieces_) {
      const Param a = s.a0 * tau_ + s.b0 * nu_;
      const Param b = s.a1 * tau_ + s.b1 * nu_;
      const Param c = closest_on_segment(y, a, b);
      const double d = (c - y).squaredNorm();
      if (d < dbest) {
        dbest = d;
        best = c;
      }
    }
    return best;
  }

 private:
  struct Piece {
    double a0, a1, b0, b1;
  };
  Param tau_;
  Param nu_;
  std::vector<Piece> pieces_;
  double lipschitz_ = 0.0;
};

std::optional<double> evaluate_at(const Chart& chart, const Param& y, std::span<const char> mask, const ScalarField& u) {
  const auto loc = chart.locate_in(y, mask);
  if (!loc) return std::nullopt;
  const auto& pc = chart.pieces()[static_cast<std::size_t>(loc->piece)];
  return u.evaluate(pc.simplex, loc->bary);
}

Cell param_cell(const ChartPiece& pc, int k, const std::array<double, 3>& u) {
  std::array<Point, 3> x{};
  for (int j = 0; j <= k; ++j) x[j] = Point(pc.param[j].x(), k == 1 ? 0.0 : pc.param[j].y(), 0.0);
  return quadrature::make_cell(k, x, u);
}

Cell ambient_cell(const ChartPiece& pc, int k, const std::array<double, 3>& u) {
  return quadrature::make_cell(k, pc.position, u);
}

std::array<double, 3> piece_values(const geometry::SimplicialManifold& m, const ChartPiece& pc, std::span<const double> v) {
  std::array<double, 3> out{};
  const auto& sv = m.simplex(pc.simplex);
  for (int j = 0; j <= m.intrinsic_dim(); ++j) out[j] = v[static_cast<std::size_t>(sv[j])];
  return out;
}

}  // namespace

LemmaCheck make_check(std::string lemma, std::string quantity, int instance, double lhs, double rhs, double margin) {
  LemmaCheck c;
  c.lemma = std::move(lemma);
  c.quantity = std::move(quantity);
  c.instance = instance;
  c.lhs = lhs;
  c.rhs = rhs;
  c.margin = margin;
  c.ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  c.holds = lhs - margin <= rhs + kRoundingSlack * std::max(std::abs(lhs), std::abs(rhs));
  return c;
}

double c_omega(double measure, const SobolevParams& params) {
  const double k = params.k;
  return 1.0 + std::pow(measure, -params.s * params.p / k) + std::pow(measure, (1.0 - params.s) * params.p / k);
}

Region support_of(const ScalarField& u) {
  const auto& m = u.mesh();
  std::vector<char> mask(static_cast<std::size_t>(m.num_simplices()), 0);
  for (int s = 0; s < m.num_simplices(); ++s) {
    if (!u.defined_on(s)) continue;
    const auto& sv = m.simplex(s);
    for (int j = 0; j <= m.intrinsic_dim(); ++j) {
      if (u.value(sv[j]) != 0.0) mask[static_cast<std::size_t>(s)] = 1;
    }
  }
  return Region(u.mesh_ptr(), std::move(mask));
}

ZeroExtension zero_extend(const ScalarField& u, const Region& support, const SobolevParams& params,
                          const QuadratureSpec& q, bool check) {
  const auto& m = u.mesh();
  const Region omega = u.domain_region();
  for (int s = 0; s < m.num_simplices(); ++s) {
    if (support.contains(s) && !u.defined_on(s)) {
      throw ExtensionError(fmt::format("zero_extend: support simplex {} lies outside the domain", s));
    }
  }
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (omega.contains_vertex(v) && !support.contains_vertex(v) && std::abs(u.value(v)) > kVanishTol) {
      throw ExtensionError(fmt::format("zero_extend: u = {:.3g} at vertex {} outside the support", u.value(v), v));
    }
  }
  std::vector<double> values(u.values().begin(), u.values().end());
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!support.contains_vertex(v)) values[static_cast<std::size_t>(v)] = 0.0;
  }
  ZeroExtension out{ScalarField::on_manifold(u.mesh_ptr(), std::move(values)), {}, 0.0};
  if (omega.is_whole()) {
    out.distance = std::numeric_limits<double>::infinity();
    return out;
  }
  const Region outside = omega.complement();
  if (support.num_simplices() == 0) {
    out.distance = std::numeric_limits<double>::infinity();
    return out;
  }
  out.distance = geometry::dist_between(outside, support);
  if (!(out.distance > 0.0)) throw ExtensionError("zero_extend: dist(M \\ omega, K) = 0");
  if (check) {
    const RowSum cross = sobolev::pair_integral(out.field, outside, support, params, q);
    const double lp = sobolev::lp_norm_power(out.field, support, params.p);
    const double rhs = 2.0 * geometry::measure(outside) * std::pow(out.distance, -params.kernel_exponent()) * lp;
    out.checks.push_back(make_check("zero-extension", "cross-term", 0, 2.0 * cross.value, rhs, 2.0 * std::abs(cross.error)));
  }
  return out;
}

Truncation truncate(const ScalarField& u, const ScalarField& psi, double lipschitz, double epsilon,
                    const SobolevParams& params, const QuadratureSpec& q, const TruncationOptions& opt) {
  const auto& m = u.mesh();
  if (&psi.mesh() != &m) throw ExtensionError("truncate: psi and u live on different meshes");
  const Region omega = u.domain_region();
  for (int s = 0; s < m.num_simplices(); ++s) {
    if (u.defined_on(s) && !psi.defined_on(s)) {
      throw ExtensionError(fmt::format("truncate: psi is not defined on simplex {}", s));
    }
  }
  std::vector<double> values(static_cast<std::size_t>(m.num_vertices()), 0.0);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!omega.contains_vertex(v)) continue;
    const double ps = psi.value(v);
    if (ps < -kVanishTol || ps > 1.0 + kVanishTol) {
      throw ExtensionError(fmt::format("truncate: psi = {:.6g} at vertex {} is outside [0, 1]", ps, v));
    }
    values[static_cast<std::size_t>(v)] = ps * u.value(v);
  }
  Truncation out{ScalarField(u.mesh_ptr(), std::move(values), std::vector<char>(u.domain().begin(), u.domain().end())), {}};
  if (!opt.check) return out;

  const double p = params.p;
  const auto nodes = region_nodes(u, omega, kCheckOrder);
  const auto psi_nodes = region_nodes(psi, omega, kCheckOrder);
  std::vector<double> prod;
  prod.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) prod.push_back(nodes[i].w * abs_pow(psi_nodes[i].u * nodes[i].u, p));
  const double u_lp = weighted_sum(nodes, p);
  const double psi_lp = quadrature::pairwise_sum(prod);
  out.checks.push_back(make_check("truncation", "lp-monotone", opt.instance, psi_lp, u_lp, rounding_margin(psi_lp, u_lp)));

  const double e = params.k + (params.s - 1.0) * p;
  const auto [far, reach] = far_field(nodes, epsilon, e, p, q.workers);
  double measure = 0.0;
  for (const auto& n : nodes) measure += n.w;
  const double hi = std::max(reach, epsilon);
  const double sup = e > 0.0 ? std::pow(epsilon, -e) : (e < 0.0 ? std::pow(hi, -e) : 1.0);
  out.checks.push_back(make_check("truncation", "far-field", opt.instance, far, measure * sup * u_lp, 0.0));

  if (opt.split_bound) {
    std::vector<Cell> cu;
    std::vector<Cell> cpu;
    for (int s = 0; s < m.num_simplices(); ++s) {
      if (!omega.contains(s)) continue;
      cu.push_back(field_cell(m, s, u.values()));
      cpu.push_back(field_cell(m, s, out.field.values()));
    }
    const auto semi_pu = sobolev::cell_seminorm(cpu, params, q);
    const auto semi_u = sobolev::cell_seminorm(cu, params, q);
    const RowSum weighted = all_pairs(cu, WeightedDistanceKernel{params.k, p, e}, q);
    const double lp_factor = std::pow(2.0, p - 1.0);
    const double lpsi = std::pow(lipschitz, p);
    const double rhs = lp_factor * (semi_u.power + lpsi * weighted.value);
    const double margin = semi_pu.error_estimate + lp_factor * (semi_u.error_estimate + lpsi * weighted.error);
    out.checks.push_back(make_check("truncation", "seminorm-split", opt.instance, semi_pu.power, rhs, margin));
  }
  return out;
}

ChartExtension chart_extend(const ScalarField& u, const Chart& chart, const Region& omega, const SobolevParams& params,
                            const QuadratureSpec& q, bool check, int instance, double active_radius) {
  if (!(active_radius > 0.0)) active_radius = chart.radius();
  const auto& m = omega.mesh();
  if (&u.mesh() != &m) throw ExtensionError("chart_extend: u and omega live on different meshes");
  const int k = m.intrinsic_dim();
  const std::size_t nv = static_cast<std::size_t>(m.num_vertices());
  const auto mask = omega.mask();

  std::vector<std::optional<Param>> params_of(nv);
  std::vector<char> patch(static_cast<std::size_t>(m.num_simplices()), 0);
  for (const auto& pc : chart.pieces()) {
    patch[static_cast<std::size_t>(pc.simplex)] = 1;
    const auto& sv = m.simplex(pc.simplex);
    for (int j = 0; j <= k; ++j) {
      if (!params_of[static_cast<std::size_t>(sv[j])]) params_of[static_cast<std::size_t>(sv[j])] = pc.param[j];
    }
  }

  std::optional<BoundaryGraph> graph;
  if (k == 2) graph.emplace(chart, omega, params_of);

  ChartExtension out{ScalarField::on_manifold(u.mesh_ptr(), std::vector<double>(nv, 0.0)), 0, 0, 0.0, {}};
  if (graph) out.graph_lipschitz = graph->lipschitz();

  std::vector<double> values(nv, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!params_of[v]) continue;
    const int vi = static_cast<int>(v);
    if (omega.contains_vertex(vi)) {
      values[v] = u.value(vi);
      continue;
    }
    const Param y = *params_of[v];
    const bool in_ball = (m.vertex(vi) - chart.center()).norm() < active_radius;
    Param target;
    Param base;
    bool direct = true;
    if (k == 1) {
      target = Param(-y.x(), 0.0);
      base = Param::Zero();
    } else {
      const double a = graph->tau().dot(y);
      const double b = graph->nu().dot(y);
      if (const auto g = graph->gamma(a)) {
        target = a * graph->tau() + (2.0 * *g - b) * graph->nu();
        base = a * graph->tau() + *g * graph->nu();
      } else {
        base = graph->nearest(y);
        target = base;
        direct = false;
      }
    }
    std::optional<double> value = direct ? evaluate_at(chart, target, mask, u) : std::nullopt;
    if (!value) {
      // Last in-domain point along the reflection ray from the boundary point.
      std::optional<double> inner = evaluate_at(chart, base, mask, u);
      if (inner) {
        double lo = 0.0;
        double hi = 1.0;
        for (int it = 0; it < kBisectionSteps; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (const auto val = evaluate_at(chart, base + mid * (target - base), mask, u)) {
            lo = mid;
            inner = val;
          } else {
            hi = mid;
          }
        }
        value = inner;
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < nv; ++w) {
          if (!params_of[w] || !omega.contains_vertex(static_cast<int>(w))) continue;
          const double d = (*params_of[w] - y).squaredNorm();
          if (d < best) {
            best = d;
            value = u.value(static_cast<int>(w));
          }
        }
        if (!value) throw ExtensionError("chart_extend: chart patch contains no point of omega");
      }
      if (in_ball) ++out.flagged;
    }
    if (in_ball) ++out.reflected;
    values[v] = *value;
  }
  out.field = ScalarField(u.mesh_ptr(), std::move(values), patch);

  if (check) {
    const auto& met = chart.metrics();
    const double e = params.kernel_exponent();
    std::vector<Cell> v_param;
    std::vector<Cell> u_amb;
    std::vector<Cell> vbar_param;
    std::vector<Cell> ubar_amb;
    for (const auto& pc : chart.pieces()) {
      const auto ub = piece_values(m, pc, out.field.values());
      vbar_param.push_back(param_cell(pc, k, ub));
      ubar_amb.push_back(ambient_cell(pc, k, ub));
      if (!omega.contains(pc.simplex)) continue;
      const auto uv = piece_values(m, pc, u.values());
      v_param.push_back(param_cell(pc, k, uv));
      u_amb.push_back(ambient_cell(pc, k, uv));
    }
    const double p = params.p;
    const double v_lp = sobolev::cell_lp_power(v_param, p);
    const double u_lp = met.inverse_jacobian * sobolev::cell_lp_power(u_amb, p);
    out.checks.push_back(make_check("transport", "pullback-lp", instance, v_lp, u_lp, rounding_margin(v_lp, u_lp)));
    const auto sv = sobolev::cell_seminorm(v_param, params, q);
    const auto su = sobolev::cell_seminorm(u_amb, params, q);
    const double cpull = std::pow(met.lipschitz, e) * met.inverse_jacobian * met.inverse_jacobian;
    out.checks.push_back(make_check("transport", "pullback-seminorm", instance, sv.power, cpull * su.power,
                                    sv.error_estimate + cpull * su.error_estimate));
    const double ub_lp = sobolev::cell_lp_power(ubar_amb, p);
    const double vb_lp = met.jacobian * sobolev::cell_lp_power(vbar_param, p);
    out.checks.push_back(make_check("transport", "pushforward-lp", instance, ub_lp, vb_lp, rounding_margin(ub_lp, vb_lp)));
    const auto sub = sobolev::cell_seminorm(ubar_amb, params, q);
    const auto svb = sobolev::cell_seminorm(vbar_param, params, q);
    const double cpush = std::pow(met.inverse_lipschitz, e) * met.jacobian * met.jacobian;
    out.checks.push_back(make_check("transport", "pushforward-seminorm", instance, sub.power, cpush * svb.power,
                                    sub.error_estimate + cpush * svb.error_estimate));
  }
  return out;
}

double chart_extension_constant(const ChartExtension& ext, const ScalarField& u, const Chart& chart, const Region& omega,
                                const SobolevParams& params, const QuadratureSpec& q) {
  const auto& m = omega.mesh();
  const int k = m.intrinsic_dim();
  std::vector<Cell> all;
  std::vector<Cell> inner;
  for (const auto& pc : chart.pieces()) {
    all.push_back(ambient_cell(pc, k, piece_values(m, pc, ext.field.values())));
    if (omega.contains(pc.simplex)) inner.push_back(ambient_cell(pc, k, piece_values(m, pc, u.values())));
  }
  const double num = sobolev::cell_lp_power(all, params.p) + sobolev::cell_seminorm(all, params, q).power;
  const double den = sobolev::cell_lp_power(inner, params.p) + sobolev::cell_seminorm(inner, params, q).power;
  if (!(den > 0.0)) return 0.0;
  return std::pow(num / den, 1.0 / params.p);
}

namespace {

/// Zero extension of a truncated piece. The lemma's domain is the domain of w when K keeps a
/// positive distance from its complement, otherwise K together with every simplex touching it.
ScalarField pad(const ScalarField& w, const SobolevParams& params, const QuadratureSpec& q, bool check, int instance,
                std::vector<LemmaCheck>& checks) {
  const auto& m = w.mesh();
  const Region support = support_of(w);
  std::vector<double> values(w.values().begin(), w.values().end());
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (!support.contains_vertex(v)) values[static_cast<std::size_t>(v)] = 0.0;
  }
  if (!check || support.num_simplices() == 0) return ScalarField::on_manifold(w.mesh_ptr(), std::move(values));

  std::vector<char> domain(w.domain().begin(), w.domain().end());
  const Region natural(w.mesh_ptr(), domain);
  if (natural.is_whole() || !(geometry::dist_between(natural.complement(), support) > 0.0)) {
    std::fill(domain.begin(), domain.end(), 0);
    for (int s = 0; s < m.num_simplices(); ++s) {
      const auto& sv = m.simplex(s);
      for (int j = 0; j <= m.intrinsic_dim(); ++j) {
        if (support.contains_vertex(sv[j])) domain[static_cast<std::size_t>(s)] = 1;
      }
    }
  }
  const ScalarField local(w.mesh_ptr(), values, domain);
  if (local.domain_region().is_whole()) return ScalarField::on_manifold(w.mesh_ptr(), std::move(values));
  auto ext = zero_extend(local, support, params, q, true);
  for (auto& c : ext.checks) {
    c.instance = instance;
    checks.push_back(std::move(c));
  }
  return std::move(ext.field);
}

}  // namespace

ExtensionResult extend(const ScalarField& u, const Region& omega, const SobolevParams& params,
                       const ExtensionOptions& opt) {
  params.validate();
  opt.quadrature.validate();
  if (&u.mesh() != &omega.mesh()) throw ExtensionError("extend: u and omega live on different meshes");
  for (int s = 0; s < omega.mesh().num_simplices(); ++s) {
    if (omega.contains(s) && !u.defined_on(s)) {
      throw ExtensionError(fmt::format("extend: u is not defined on simplex {} of omega", s));
    }
  }
  if (omega.num_simplices() == 0) throw ExtensionError("extend: omega is empty");

  ScalarField ur = sobolev::restrict(u, omega);
  Region wr = omega;
  for (int l = 0; l < opt.refinement_levels; ++l) {
    const auto ref = geometry::refine(wr.mesh());
    wr = geometry::refine(wr, ref);
    ur = sobolev::refine(ur, ref);
  }
  const ManifoldPtr mesh = wr.mesh_ptr();
  const int k = mesh->intrinsic_dim();
  const QuadratureSpec& q = opt.quadrature;

  ExtensionReport rep;
  rep.measure = geometry::measure(wr);
  rep.refinement_levels = opt.refinement_levels;

  std::vector<double> sum(static_cast<std::size_t>(mesh->num_vertices()), 0.0);
  if (wr.is_whole()) {
    std::copy(ur.values().begin(), ur.values().end(), sum.begin());
  } else {
    double eps;
    try {
      eps = opt.epsilon > 0.0 ? opt.epsilon : atlas::select_epsilon(omega.mesh_ptr());
    } catch (const std::exception& ex) {
      throw ExtensionError(fmt::format("extend: epsilon selection: {}", ex.what()));
    }
    if (opt.size_scaled_radius) eps = std::min(eps, std::pow(rep.measure, 1.0 / k) / 4.0);
    rep.epsilon = eps;

    std::optional<atlas::BoundaryCover> built;
    atlas::PartitionOfUnity pu;
    try {
      built = atlas::build_cover(wr, eps);
      pu = atlas::partition_of_unity(*built);
    } catch (const std::exception& ex) {
      throw ExtensionError(fmt::format("extend: cover: {}", ex.what()));
    }
    const auto& cover = *built;
    rep.cover_size = static_cast<int>(cover.centers.size());

    TruncationOptions topt;
    topt.check = opt.lemma_checks;
    topt.split_bound = opt.split_bound;
    auto add = [&](const ScalarField& w) {
      for (std::size_t v = 0; v < sum.size(); ++v) sum[v] += w.value(static_cast<int>(v));
    };

    try {
      topt.instance = 0;
      auto t0 = truncate(ur, pu.psi[0], pu.lipschitz[0], eps, params, q, topt);
      rep.checks.insert(rep.checks.end(), t0.checks.begin(), t0.checks.end());
      add(pad(t0.field, params, q, opt.lemma_checks, 0, rep.checks));
    } catch (const std::exception& ex) {
      throw ExtensionError(fmt::format("extend: interior cutoff: {}", ex.what()));
    }

    const std::size_t n_charts = cover.centers.size();
    const std::size_t stride =
        opt.checked_charts < 0 ? 1 : (opt.checked_charts == 0 ? n_charts + 1 : std::max<std::size_t>(1, n_charts / static_cast<std::size_t>(opt.checked_charts)));
    for (std::size_t i = 0; i < n_charts; ++i) {
      const int inst = static_cast<int>(i) + 1;
      const bool checked = opt.lemma_checks && i % stride == 0 &&
                           (opt.checked_charts < 0 || i / stride < static_cast<std::size_t>(opt.checked_charts));
      topt.check = checked;
      try {
        std::optional<ChartExtension> built_ext;
        for (const double factor : {kChartReach, 1.0}) {
          try {
            const Chart chart = atlas::build_chart(mesh, cover.centers[i], factor * eps);
            built_ext = chart_extend(ur, chart, wr, params, q, checked, inst, eps);
            break;
          } catch (const std::exception&) {
            if (factor == 1.0) throw;
          }
        }
        auto& ce = *built_ext;
        rep.reflected += ce.reflected;
        rep.flagged += ce.flagged;
        rep.checks.insert(rep.checks.end(), ce.checks.begin(), ce.checks.end());
        topt.instance = inst;
        auto ti = truncate(ce.field, pu.psi[i + 1], pu.lipschitz[i + 1], eps, params, q, topt);
        rep.checks.insert(rep.checks.end(), ti.checks.begin(), ti.checks.end());
        add(pad(ti.field, params, q, checked, inst, rep.checks));
      } catch (const std::exception& ex) {
        throw ExtensionError(fmt::format("extend: chart {}: {}", inst, ex.what()));
      }
    }
  }

  ScalarField eu = ScalarField::on_manifold(mesh, std::move(sum));

  double residual = 0.0;
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    if (wr.contains_vertex(v)) residual = std::max(residual, std::abs(eu.value(v) - ur.value(v)));
  }
  const auto& rule = quadrature::simplex_rule(k, kCheckOrder);
  for (int s = 0; s < mesh->num_simplices(); ++s) {
    if (!wr.contains(s)) continue;
    for (const auto& b : rule.bary) residual = std::max(residual, std::abs(eu.evaluate(s, b) - ur.evaluate(s, b)));
  }
  rep.agreement_residual = residual;

  rep.c_omega = c_omega(rep.measure, params);
  if (opt.norms) {
    const Region whole = Region::whole(mesh);
    const auto semi = sobolev::gagliardo_seminorm(eu, whole, params, q);
    rep.eu_lp_power = sobolev::lp_norm_power(eu, whole, params.p);
    rep.eu_semi_power = semi.power;
    rep.eu_power = rep.eu_lp_power + rep.eu_semi_power;
    rep.eu_error = semi.error_estimate;
    rep.u_lp_power = sobolev::lp_norm_power(ur, wr, params.p);
    rep.u_semi_power = sobolev::gagliardo_seminorm(ur, wr, params, q).power;
    const double den = rep.c_omega * rep.u_lp_power + rep.u_semi_power;
    const double naive = rep.u_lp_power + rep.u_semi_power;
    rep.ratio = den > 0.0 ? rep.eu_power / den : 0.0;
    rep.naive_ratio = naive > 0.0 ? rep.eu_power / naive : 0.0;
  }
  return {std::move(eu), std::move(ur), std::move(wr), std::move(rep)};
}

RatioStudy ratio_study(const std::vector<NamedField>& fields, const std::vector<Region>& regions,
                       const SobolevParams& params, const ExtensionOptions& opt) {
  if (fields.empty() || regions.empty()) throw ExtensionError("ratio_study: empty field or region family");
  ExtensionOptions o = opt;
  o.norms = true;
  RatioStudy out;
  for (const auto& f : fields) {
    out.fields.push_back(f.name);
    std::vector<double> lx;
    std::vector<double> lr;
    std::vector<double> ln;
    for (const auto& omega : regions) {
      const auto u = ScalarField::sample(omega, f.f);
      auto res = extend(u, omega, params, o);
      RatioRow row{f.name, res.report.measure, std::move(res.report)};
      if (row.report.ratio > 0.0 && row.report.naive_ratio > 0.0) {
        lx.push_back(std::log(row.measure));
        lr.push_back(std::log(row.report.ratio));
        ln.push_back(std::log(row.report.naive_ratio));
      }
      out.rows.push_back(std::move(row));
    }
    const bool fit = lx.size() >= 2;
    out.slope.push_back(fit ? atlas::fit_slope(lx, lr) : 0.0);
    out.naive_slope.push_back(fit ? atlas::fit_slope(lx, ln) : 0.0);
  }
  return out;
}

}  // namespace fracsob::extension
