#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fracsob/geometry.hpp"

namespace fracsob::quadrature {

using geometry::Point;

/// Settings for simplex-pair quadrature of singular double integrals.
struct QuadratureSpec {
  int far_order = 3;            // Gauss points per direction on well-separated pairs, 2..7
  int near_refinement = 6;      // dyadic grading depth toward shared faces
  double separation_ratio = 2;  // far when center distance >= ratio * larger diameter
  int workers = 1;              // threads for the pair loop; results do not depend on it

  void validate() const;
};

/// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const LineRule& gauss_legendre(int n);

/// Rule on the reference k-simplex in barycentric coordinates; weights sum to 1.
struct SimplexRule {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weights;
};
/// k = 1: n-point Gauss-Legendre; k = 2: n x n collapsed (conical product) Gauss rule.
const SimplexRule& simplex_rule(int k, int order);

/// A k-simplex carrying a linear field: vertex positions and vertex values.
struct Cell {
  int k = 1;
  std::array<Point, 3> x;
  std::array<double, 3> u{};
  double volume = 0.0;
  Point center;
  double diameter = 0.0;
};

Cell make_cell(int k, const std::array<Point, 3>& x, const std::array<double, 3>& u);
/// Dyadic children: 2 for segments, 4 for triangles. Returns the child count.
int subdivide(const Cell& cell, std::array<Cell, 4>& children);

/// Largest node count of a rule used by the integrator (far_order <= 7, plus one).
inline constexpr int kMaxNodes = 64;

struct NodeSet {
  int size = 0;
  std::array<Point, kMaxNodes> x;
  std::array<double, kMaxNodes> u{};
  std::array<double, kMaxNodes> w{};  // absolute weights (rule weight * volume)
};
NodeSet make_nodes(const Cell& cell, const SimplexRule& rule);

/// Sum of per-row contributions computed on `workers` threads, combined by a
/// fixed pairwise tree so the result is bit-identical for any worker count.
struct RowSum {
  double value = 0.0;
  double error = 0.0;
};
RowSum deterministic_sum(int rows, const std::function<RowSum(int)>& row, int workers);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> values);

/**
 * Double integral of kernel(x, u(x), y, u(y)) over a pair of cells.
 *
 * Pairs that are far or do not touch use tensor Gauss. Touching pairs are split
 * dyadically up to `near_refinement` levels and only touching children are split
 * again, which grades toward the shared face. Identical cells go
 * through `Kernel::self` when it returns a value, otherwise they are subdivided
 * and leaf self-pairs use Gauss rules of adjacent orders so nodes never coincide.
 * The error estimate is the difference between the last two grading depths.
 */
template <typename Kernel>
class PairIntegrator {
 public:
  PairIntegrator(const Kernel& kernel, const QuadratureSpec& spec)
      : kernel_(kernel),
        spec_(spec),
        far_rule_(&simplex_rule(kernel.dim(), spec.far_order)),
        offset_rule_(&simplex_rule(kernel.dim(), spec.far_order + 1)) {}

  RowSum self(const Cell& a) const {
    if (auto exact = kernel_.self(a)) return {*exact, 0.0};
    RowSum out;
    self_recursive(a, 0, out);
    return out;
  }

  RowSum pair(const Cell& a, const Cell& b) const {
    RowSum out;
    if (refines(a, b, 0)) {
      pair_recursive(a, b, 0, out);
    } else {
      out.value = gauss(a, b);
    }
    return out;
  }

  /// Tensor Gauss on precomputed node sets.
  double tensor(const NodeSet& a, const NodeSet& b) const {
    double sum = 0.0;
    for (int i = 0; i < a.size; ++i) {
      double row = 0.0;
      for (int j = 0; j < b.size; ++j) {
        row += b.w[j] * kernel_(a.x[i], a.u[i], b.x[j], b.u[j]);
      }
      sum += a.w[i] * row;
    }
    return sum;
  }

  /// Cells produced by the same dyadic scheme touch exactly when they share a vertex.
  static bool touching(const Cell& a, const Cell& b) {
    for (int i = 0; i <= a.k; ++i) {
      for (int j = 0; j <= b.k; ++j) {
        if (a.x[i] == b.x[j]) return true;
      }
    }
    return false;
  }

  bool is_far(const Cell& a, const Cell& b) const {
    return (a.center - b.center).norm() >= spec_.separation_ratio * std::max(a.diameter, b.diameter);
  }

  const SimplexRule& far_rule() const { return *far_rule_; }

 private:
  double gauss(const Cell& a, const Cell& b) const {
    return tensor(make_nodes(a, *far_rule_), make_nodes(b, *far_rule_));
  }

  double gauss_self(const Cell& a) const {
    return tensor(make_nodes(a, *far_rule_), make_nodes(a, *offset_rule_));
  }

  bool refines(const Cell& a, const Cell& b, int depth) const {
    return depth < spec_.near_refinement && touching(a, b) && !is_far(a, b);
  }

  void pair_recursive(const Cell& a, const Cell& b, int depth, RowSum& out) const {
    std::array<Cell, 4> ca;
    std::array<Cell, 4> cb;
    const int na = subdivide(a, ca);
    const int nb = subdivide(b, cb);
    std::array<NodeSet, 4> xa;
    std::array<NodeSet, 4> xb;
    for (int i = 0; i < na; ++i) xa[i] = make_nodes(ca[i], *far_rule_);
    for (int j = 0; j < nb; ++j) xb[j] = make_nodes(cb[j], *far_rule_);
    RowSum children;
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < nb; ++j) {
        if (refines(ca[i], cb[j], depth + 1)) {
          pair_recursive(ca[i], cb[j], depth + 1, children);
        } else {
          children.value += tensor(xa[i], xb[j]);
        }
      }
    }
    out.value += children.value;
    out.error += children.error;
    if (depth + 1 == spec_.near_refinement) out.error += children.value - gauss(a, b);
  }

  void self_recursive(const Cell& a, int depth, RowSum& out) const {
    if (depth >= spec_.near_refinement) {
      out.value += gauss_self(a);
      return;
    }
    std::array<Cell, 4> ca;
    const int n = subdivide(a, ca);
    RowSum children;
    for (int i = 0; i < n; ++i) {
      self_recursive(ca[i], depth + 1, children);
      for (int j = i + 1; j < n; ++j) {
        RowSum off;
        if (refines(ca[i], ca[j], depth + 1)) {
          pair_recursive(ca[i], ca[j], depth + 1, off);
        } else {
          off.value = gauss(ca[i], ca[j]);
        }
        children.value += 2.0 * off.value;
        children.error += 2.0 * off.error;
      }
    }
    out.value += children.value;
    out.error += children.error;
    if (depth + 1 == spec_.near_refinement) out.error += children.value - gauss_self(a);
  }

  const Kernel& kernel_;
  QuadratureSpec spec_;
  const SimplexRule* far_rule_;
  const SimplexRule* offset_rule_;
};

}  // namespace fracsob::quadrature
