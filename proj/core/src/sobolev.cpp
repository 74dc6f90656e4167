#include "fracsob/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace fracsob::sobolev {

using quadrature::Cell;
using quadrature::RowSum;

void SobolevParams::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw SobolevError(fmt::format("s must lie in (0, 1) (got {})", s));
  if (!(p >= 1.0) || !std::isfinite(p)) throw SobolevError(fmt::format("p must lie in [1, inf) (got {})", p));
  if (k != 1 && k != 2) throw SobolevError(fmt::format("intrinsic dimension must be 1 or 2 (got {})", k));
}

SobolevParams SobolevParams::make(double s, double p, int k) {
  SobolevParams params{s, p, k};
  params.validate();
  return params;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(ManifoldPtr mesh, std::vector<double> values, std::vector<char> domain)
    : mesh_(std::move(mesh)), values_(std::move(values)), domain_(std::move(domain)) {
  if (!mesh_) throw SobolevError("field without mesh");
  if (values_.size() != static_cast<std::size_t>(mesh_->num_vertices())) {
    throw SobolevError(fmt::format("field has {} values for {} vertices", values_.size(),
                                   mesh_->num_vertices()));
  }
  if (domain_.size() != static_cast<std::size_t>(mesh_->num_simplices())) {
    throw SobolevError("field domain mask does not match mesh");
  }
  std::vector<char> used(values_.size(), 0);
  for (int i = 0; i < mesh_->num_simplices(); ++i) {
    if (!defined_on(i)) continue;
    for (int j = 0; j < mesh_->vertices_per_simplex(); ++j) used[mesh_->simplex(i)[j]] = 1;
  }
  for (std::size_t v = 0; v < values_.size(); ++v) {
    if (!used[v]) {
      values_[v] = 0.0;
    } else if (!std::isfinite(values_[v])) {
      throw SobolevError(fmt::format("field value at vertex {} is not finite", v));
    }
  }
}

ScalarField ScalarField::on_region(const Region& region, std::vector<double> values) {
  return ScalarField(region.mesh_ptr(), std::move(values),
                     std::vector<char>(region.mask().begin(), region.mask().end()));
}

ScalarField ScalarField::on_manifold(ManifoldPtr mesh, std::vector<double> values) {
  std::vector<char> all(static_cast<std::size_t>(mesh->num_simplices()), 1);
  return ScalarField(std::move(mesh), std::move(values), std::move(all));
}

ScalarField ScalarField::constant(const Region& region, double c) {
  return on_region(region, std::vector<double>(static_cast<std::size_t>(region.mesh().num_vertices()), c));
}

ScalarField ScalarField::sample(const Region& region, const std::function<double(const Point&)>& f) {
  const auto& m = region.mesh();
  std::vector<double> values(static_cast<std::size_t>(m.num_vertices()), 0.0);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (region.contains_vertex(v)) values[v] = f(m.vertex(v));
  }
  return on_region(region, std::move(values));
}

Region ScalarField::domain_region() const { return Region(mesh_, domain_); }

double ScalarField::evaluate(int simplex, const std::array<double, 3>& bary) const {
  const auto& s = mesh_->simplex(simplex);
  double v = 0.0;
  for (int j = 0; j < mesh_->vertices_per_simplex(); ++j) v += bary[j] * values_[s[j]];
  return v;
}

ScalarField ScalarField::combine(double a, const ScalarField& other, double b) const {
  if (other.mesh_ != mesh_) throw SobolevError("combine: fields live on different meshes");
  if (other.domain_ != domain_) throw SobolevError("combine: fields have different domains");
  std::vector<double> values(values_.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a * values_[i] + b * other.values_[i];
  return ScalarField(mesh_, std::move(values), domain_);
}

ScalarField ScalarField::scaled(double a) const {
  std::vector<double> values(values_.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a * values_[i];
  return ScalarField(mesh_, std::move(values), domain_);
}

// ---------------------------------------------------------------------------
// Norms

namespace {

void require_domain(const ScalarField& u, const Region& region, const char* op) {
  if (u.mesh_ptr() != region.mesh_ptr()) {
    throw SobolevError(fmt::format("{}: domain mismatch (field and region use different meshes)", op));
  }
  for (int i = 0; i < region.mesh().num_simplices(); ++i) {
    if (region.contains(i) && !u.defined_on(i)) {
      throw SobolevError(fmt::format("{}: domain mismatch (field undefined on simplex {})", op, i));
    }
  }
}

Cell cell_of(const ScalarField& u, int simplex) {
  const auto& m = u.mesh();
  const auto& s = m.simplex(simplex);
  std::array<Point, 3> x;
  std::array<double, 3> vals{};
  for (int j = 0; j < m.vertices_per_simplex(); ++j) {
    x[j] = m.vertex(s[j]);
    vals[j] = u.value(s[j]);
  }
  if (m.intrinsic_dim() == 1) {
    x[2] = x[1];
    vals[2] = vals[1];
  }
  return quadrature::make_cell(m.intrinsic_dim(), x, vals);
}

double int_pow(double x, double p) {
  if (p == 2.0) return x * x;
  if (p == 4.0) {
    const double x2 = x * x;
    return x2 * x2;
  }
  if (p == 1.0) return x;
  return std::pow(x, p);
}

int lp_order(double p) {
  // Gauss with n points is exact to degree 2n - 1 per direction.
  if (p == std::floor(p) && static_cast<int>(p) % 2 == 0) return std::max(2, static_cast<int>(p) / 2 + 1);
  return 8;
}

/// r2^e, using square roots when 4e is an integer.
class SquaredDistancePower {
 public:
  explicit SquaredDistancePower(double e) : e_(e) {
    const double q = -4.0 * e;
    if (q > 0.0 && q <= 64.0 && q == std::floor(q)) quarters_ = static_cast<int>(q);
  }

  double operator()(double r2) const {
    if (quarters_ == 0) return std::pow(r2, e_);
    double v = 1.0;
    for (int i = 0; i < quarters_ / 4; ++i) v *= r2;
    const int rest = quarters_ % 4;
    if (rest != 0) {
      const double h = std::sqrt(r2);
      if (rest >= 2) v *= h;
      if (rest % 2 == 1) v *= std::sqrt(h);
    }
    return 1.0 / v;
  }

 private:
  double e_;
  int quarters_ = 0;
};

struct SeminormKernel {
  SobolevParams params;
  SquaredDistancePower inverse_power;

  explicit SeminormKernel(const SobolevParams& prm)
      : params(prm), inverse_power(-0.5 * prm.kernel_exponent()) {}

  int dim() const { return params.k; }

  double operator()(const Point& x, double ux, const Point& y, double uy) const {
    const double r2 = (x - y).squaredNorm();
    const double du = ux - uy;
    if (params.p == 2.0) return du * du * inverse_power(r2);
    return int_pow(std::abs(du), params.p) * inverse_power(r2);
  }

  std::optional<double> self(const Cell& c) const { return self_interaction(c, params); }
};

}  // namespace

double lp_norm_power(const ScalarField& u, const Region& region, double p) {
  if (!(p >= 1.0)) throw SobolevError(fmt::format("lp_norm: p must be >= 1 (got {})", p));
  require_domain(u, region, "lp_norm");
  const auto& m = region.mesh();
  const auto& rule = quadrature::simplex_rule(m.intrinsic_dim(), lp_order(p));
  std::vector<double> parts;
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (!region.contains(i)) continue;
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      sum += rule.weights[q] * int_pow(std::abs(u.evaluate(i, rule.bary[q])), p);
    }
    parts.push_back(sum * m.volume(i));
  }
  return quadrature::pairwise_sum(parts);
}

double lp_norm(const ScalarField& u, const Region& region, double p) {
  return std::pow(lp_norm_power(u, region, p), 1.0 / p);
}

double self_interaction(const Cell& c, const SobolevParams& params) {
  const double a = (1.0 - params.s) * params.p;
  if (c.k == 1) {
    const double h = c.volume;
    const double g = (c.u[1] - c.u[0]) / h;
    if (g == 0.0) return 0.0;
    return 2.0 * h * std::pow(std::abs(g), params.p) * std::pow(h, a) / (a * (a + 1.0));
  }
  // Local orthonormal frame of the triangle.
  const Point e1 = (c.x[1] - c.x[0]).normalized();
  const Point t2 = c.x[2] - c.x[0];
  const Point e2 = (t2 - t2.dot(e1) * e1).normalized();
  Eigen::Matrix2d edges;
  edges << (c.x[1] - c.x[0]).dot(e1), t2.dot(e1), 0.0, t2.dot(e2);
  // Rows of the inverse are grad(lambda_1), grad(lambda_2).
  const Eigen::Matrix2d inv = edges.inverse();
  std::array<Eigen::Vector2d, 3> grad_lambda;
  grad_lambda[1] = inv.row(0).transpose();
  grad_lambda[2] = inv.row(1).transpose();
  grad_lambda[0] = -grad_lambda[1] - grad_lambda[2];
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int i = 1; i < 3; ++i) g += (c.u[i] - c.u[0]) * grad_lambda[i];
  if (g.squaredNorm() == 0.0) return 0.0;

  // The triangle meets its translate by r*theta in a homothetic copy with ratio
  // 1 - r / R(theta), R(theta) = 1 / sum_i max(0, grad(lambda_i) . theta). The
  // radial integral then reduces to |T| R^a B(a, 3).
  std::vector<double> breaks{0.0, std::numbers::pi};
  auto add_zero_direction = [&](const Eigen::Vector2d& w) {
    double th = std::atan2(w.y(), w.x()) + 0.5 * std::numbers::pi;
    th = std::fmod(th, std::numbers::pi);
    if (th < 0) th += std::numbers::pi;
    breaks.push_back(th);
  };
  for (const auto& gl : grad_lambda) add_zero_direction(gl);
  add_zero_direction(g);
  std::sort(breaks.begin(), breaks.end());

  const auto& rule = quadrature::gauss_legendre(16);
  double angular = 0.0;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double lo = breaks[b];
    const double len = breaks[b + 1] - lo;
    if (len <= 0.0) continue;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double th = lo + len * rule.nodes[q];
      const Eigen::Vector2d dir(std::cos(th), std::sin(th));
      double inv_r = 0.0;
      for (const auto& gl : grad_lambda) inv_r += std::max(0.0, gl.dot(dir));
      angular += len * rule.weights[q] * std::pow(std::abs(g.dot(dir)), params.p) * std::pow(inv_r, -a);
    }
  }
  const double beta = 2.0 / (a * (a + 1.0) * (a + 2.0));
  return 2.0 * c.volume * beta * angular;
}

namespace {

RowSum sum_pairs(const std::vector<Cell>& cells, const std::vector<int>& ia, const std::vector<int>& ib, bool same,
                 const SobolevParams& params, const QuadratureSpec& q) {
  const SeminormKernel kernel(params);
  const quadrature::PairIntegrator<SeminormKernel> integrator(kernel, q);

  std::vector<quadrature::NodeSet> nodes(cells.size());
  std::vector<char> used(cells.size(), 0);
  for (int i : ia) used[i] = 1;
  for (int i : ib) used[i] = 1;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (used[i]) nodes[i] = quadrature::make_nodes(cells[i], integrator.far_rule());
  }

  auto pair = [&](int s, int t) -> RowSum {
    if (s == t) return integrator.self(cells[s]);
    if (integrator.is_far(cells[s], cells[t])) return {integrator.tensor(nodes[s], nodes[t]), 0.0};
    return integrator.pair(cells[s], cells[t]);
  };

  auto row = [&](int r) -> RowSum {
    const int s = ia[r];
    RowSum out;
    if (same) {
      const auto self = pair(s, s);
      out.value += self.value;
      out.error += self.error;
      for (std::size_t c = r + 1; c < ib.size(); ++c) {
        const auto off = pair(s, ib[c]);
        out.value += 2.0 * off.value;
        out.error += 2.0 * off.error;
      }
    } else {
      for (int t : ib) {
        const auto part = pair(s, t);
        out.value += part.value;
        out.error += part.error;
      }
    }
    return out;
  };
  return quadrature::deterministic_sum(static_cast<int>(ia.size()), row, q.workers);
}

SeminormResult to_seminorm(const RowSum& sum, double p) {
  SeminormResult out;
  out.power = std::max(0.0, sum.value);
  out.value = std::pow(out.power, 1.0 / p);
  out.error_estimate = std::abs(sum.error);
  return out;
}

}  // namespace

RowSum pair_integral(const ScalarField& u, const Region& a, const Region& b,
                     const SobolevParams& params, const QuadratureSpec& q) {
  params.validate();
  q.validate();
  if (params.k != u.mesh().intrinsic_dim()) {
    throw SobolevError(fmt::format("params.k = {} but mesh has k = {}", params.k, u.mesh().intrinsic_dim()));
  }
  require_domain(u, a, "pair_integral");
  require_domain(u, b, "pair_integral");

  const bool same = std::equal(a.mask().begin(), a.mask().end(), b.mask().begin(), b.mask().end());
  std::vector<Cell> cells(static_cast<std::size_t>(u.mesh().num_simplices()));
  for (int i = 0; i < u.mesh().num_simplices(); ++i) {
    if (a.contains(i) || b.contains(i)) cells[i] = cell_of(u, i);
  }
  return sum_pairs(cells, a.simplex_ids(), b.simplex_ids(), same, params, q);
}

SeminormResult cell_seminorm(std::span<const Cell> cells, const SobolevParams& params, const QuadratureSpec& q) {
  params.validate();
  q.validate();
  std::vector<Cell> all(cells.begin(), cells.end());
  std::vector<int> ids(all.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (all[i].k != params.k) throw SobolevError("cell_seminorm: cell dimension differs from params.k");
    ids[i] = static_cast<int>(i);
  }
  return to_seminorm(sum_pairs(all, ids, ids, true, params, q), params.p);
}

double cell_lp_power(std::span<const Cell> cells, double p) {
  if (!(p >= 1.0)) throw SobolevError(fmt::format("lp_norm: p must be >= 1 (got {})", p));
  std::vector<double> parts;
  parts.reserve(cells.size());
  for (const auto& c : cells) {
    const auto& rule = quadrature::simplex_rule(c.k, lp_order(p));
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      double v = 0.0;
      for (int j = 0; j <= c.k; ++j) v += rule.bary[q][j] * c.u[j];
      sum += rule.weights[q] * int_pow(std::abs(v), p);
    }
    parts.push_back(sum * c.volume);
  }
  return quadrature::pairwise_sum(parts);
}

SeminormResult gagliardo_seminorm(const ScalarField& u, const Region& region,
                                  const SobolevParams& params, const QuadratureSpec& q) {
  return to_seminorm(pair_integral(u, region, region, params, q), params.p);
}

NormRecord wsp_norm(const ScalarField& u, const Region& region, const SobolevParams& params,
                    const QuadratureSpec& q) {
  const double lp_p = lp_norm_power(u, region, params.p);
  const auto semi = gagliardo_seminorm(u, region, params, q);
  NormRecord out;
  out.lp = std::pow(lp_p, 1.0 / params.p);
  out.seminorm = semi.value;
  out.wsp = std::pow(lp_p + semi.power, 1.0 / params.p);
  out.error_estimate = semi.error_estimate;
  return out;
}

// ---------------------------------------------------------------------------
// Restriction, refinement, I/O

ScalarField restrict(const ScalarField& u, const Region& sub) {
  if (u.mesh_ptr() != sub.mesh_ptr()) throw SobolevError("restrict: subregion lives on a different mesh");
  for (int i = 0; i < sub.mesh().num_simplices(); ++i) {
    if (sub.contains(i) && !u.defined_on(i)) {
      throw SobolevError(fmt::format("restrict: simplex {} of the subregion is outside the field domain", i));
    }
  }
  return ScalarField(u.mesh_ptr(), std::vector<double>(u.values().begin(), u.values().end()),
                     std::vector<char>(sub.mask().begin(), sub.mask().end()));
}

ScalarField refine(const ScalarField& u, const geometry::Refinement& refinement) {
  const std::size_t children = u.mesh().intrinsic_dim() == 1 ? 2 : 4;
  if (refinement.parent_simplex.size() != children * static_cast<std::size_t>(u.mesh().num_simplices())) {
    throw SobolevError("refine: refinement was not built from the field's mesh");
  }
  std::vector<double> values(refinement.vertex_parents.size());
  for (std::size_t v = 0; v < values.size(); ++v) {
    const auto [a, b] = refinement.vertex_parents[v];
    values[v] = 0.5 * (u.value(a) + u.value(b));
  }
  std::vector<char> domain(refinement.parent_simplex.size());
  for (std::size_t i = 0; i < domain.size(); ++i) domain[i] = u.defined_on(refinement.parent_simplex[i]) ? 1 : 0;
  return ScalarField(refinement.mesh, std::move(values), std::move(domain));
}

void save_field_csv(const ScalarField& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw SobolevError(fmt::format("cannot write '{}'", path.string()));
  const auto dom = u.domain_region();
  for (int v = 0; v < u.mesh().num_vertices(); ++v) {
    if (dom.contains_vertex(v)) out << fmt::format("{},{:.17g}\n", v, u.value(v));
  }
}

ScalarField load_field_csv(const Region& domain, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SobolevError(fmt::format("cannot open '{}'", path.string()));
  std::vector<double> values(static_cast<std::size_t>(domain.mesh().num_vertices()), 0.0);
  std::vector<char> seen(values.size(), 0);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw SobolevError(fmt::format("field CSV line {}: expected 'index,value'", line_no));
    try {
      const int v = std::stoi(line.substr(0, comma));
      const double val = std::stod(line.substr(comma + 1));
      if (v < 0 || v >= domain.mesh().num_vertices()) {
        throw SobolevError(fmt::format("field CSV line {}: vertex {} out of range", line_no, v));
      }
      values[v] = val;
      seen[v] = 1;
    } catch (const std::logic_error&) {
      throw SobolevError(fmt::format("field CSV line {}: unparsable entry", line_no));
    }
  }
  for (int v = 0; v < domain.mesh().num_vertices(); ++v) {
    if (domain.contains_vertex(v) && !seen[v]) {
      throw SobolevError(fmt::format("field CSV has no value for vertex {}", v));
    }
  }
  return ScalarField::on_region(domain, std::move(values));
}

}  // namespace fracsob::sobolev
