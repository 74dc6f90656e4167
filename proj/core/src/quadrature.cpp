#include "fracsob/quadrature.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

namespace fracsob::quadrature {

void QuadratureSpec::validate() const {
  if (far_order < 2 || far_order > 7) {
    throw std::invalid_argument(fmt::format("far_order must lie in [2, 7] (got {})", far_order));
  }
  if (near_refinement < 2) {
    throw std::invalid_argument(fmt::format("near_refinement must be >= 2 (got {})", near_refinement));
  }
  if (!(separation_ratio >= 1.0)) {
    throw std::invalid_argument(fmt::format("separation_ratio must be >= 1 (got {})", separation_ratio));
  }
  if (workers < 1) throw std::invalid_argument(fmt::format("workers must be >= 1 (got {})", workers));
}

namespace {

LineRule compute_gauss_legendre(int n) {
  LineRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pn1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int m = 2; m <= n; ++m) {
      const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

SimplexRule compute_simplex_rule(int k, int order) {
  const auto& line = gauss_legendre(order);
  SimplexRule rule;
  if (k == 1) {
    for (int i = 0; i < order; ++i) {
      const double t = line.nodes[i];
      rule.bary.push_back({1.0 - t, t, 0.0});
      rule.weights.push_back(line.weights[i]);
    }
    return rule;
  }
  // Collapsed square: (a, b) -> (a, b (1 - a)) with Jacobian (1 - a); reference area 1/2.
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      const double a = line.nodes[i];
      const double b = line.nodes[j] * (1.0 - a);
      rule.bary.push_back({1.0 - a - b, a, b});
      rule.weights.push_back(2.0 * line.weights[i] * line.weights[j] * (1.0 - a));
    }
  }
  return rule;
}

}  // namespace

const LineRule& gauss_legendre(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument(fmt::format("Gauss-Legendre order {} outside [1, 64]", n));
  static std::mutex mutex;
  static std::map<int, LineRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

const SimplexRule& simplex_rule(int k, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, SimplexRule> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({k, order}); it != cache.end()) return it->second;
  }
  auto rule = compute_simplex_rule(k, order);
  std::lock_guard lock(mutex);
  return cache.emplace(std::pair{k, order}, std::move(rule)).first->second;
}

Cell make_cell(int k, const std::array<Point, 3>& x, const std::array<double, 3>& u) {
  Cell c;
  c.k = k;
  c.x = x;
  c.u = u;
  if (k == 1) {
    c.volume = (x[1] - x[0]).norm();
    c.center = 0.5 * (x[0] + x[1]);
    c.diameter = c.volume;
    c.x[2] = c.x[1];
  } else {
    c.volume = 0.5 * (x[1] - x[0]).cross(x[2] - x[0]).norm();
    c.center = (x[0] + x[1] + x[2]) / 3.0;
    c.diameter = std::max({(x[1] - x[0]).norm(), (x[2] - x[1]).norm(), (x[0] - x[2]).norm()});
  }
  return c;
}

int subdivide(const Cell& cell, std::array<Cell, 4>& children) {
  const auto& x = cell.x;
  const auto& u = cell.u;
  if (cell.k == 1) {
    const Point m = 0.5 * (x[0] + x[1]);
    const double um = 0.5 * (u[0] + u[1]);
    children[0] = make_cell(1, {x[0], m, m}, {u[0], um, um});
    children[1] = make_cell(1, {m, x[1], x[1]}, {um, u[1], u[1]});
    return 2;
  }
  const Point ab = 0.5 * (x[0] + x[1]);
  const Point bc = 0.5 * (x[1] + x[2]);
  const Point ca = 0.5 * (x[2] + x[0]);
  const double uab = 0.5 * (u[0] + u[1]);
  const double ubc = 0.5 * (u[1] + u[2]);
  const double uca = 0.5 * (u[2] + u[0]);
  children[0] = make_cell(2, {x[0], ab, ca}, {u[0], uab, uca});
  children[1] = make_cell(2, {ab, x[1], bc}, {uab, u[1], ubc});
  children[2] = make_cell(2, {ca, bc, x[2]}, {uca, ubc, u[2]});
  children[3] = make_cell(2, {ab, bc, ca}, {uab, ubc, uca});
  return 4;
}

NodeSet make_nodes(const Cell& cell, const SimplexRule& rule) {
  NodeSet nodes;
  const auto n = rule.weights.size();
  if (n > static_cast<std::size_t>(kMaxNodes)) throw std::invalid_argument(fmt::format("rule has {} nodes, limit {}", n, kMaxNodes));
  nodes.size = static_cast<int>(n);
  const int nv = cell.k + 1;
  for (std::size_t q = 0; q < n; ++q) {
    Point x = Point::Zero();
    double u = cell.u[0];
    for (int j = 0; j < nv; ++j) {
      x += rule.bary[q][j] * cell.x[j];
      if (j > 0) u += rule.bary[q][j] * (cell.u[j] - cell.u[0]);
    }
    nodes.x[q] = x;
    nodes.u[q] = u;
    nodes.w[q] = rule.weights[q] * cell.volume;
  }
  return nodes;
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

RowSum deterministic_sum(int rows, const std::function<RowSum(int)>& row, int workers) {
  std::vector<double> values(rows, 0.0);
  std::vector<double> errors(rows, 0.0);
  auto run = [&](int first, int stride) {
    for (int i = first; i < rows; i += stride) {
      const auto r = row(i);
      values[i] = r.value;
      errors[i] = r.error;
    }
  };
  if (workers <= 1 || rows < 2) {
    run(0, 1);
  } else {
    const int n = std::min(workers, rows);
    std::vector<std::exception_ptr> failures(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int t = 0; t < n; ++t) {
      threads.emplace_back([&, t] {
        try {
          run(t, n);
        } catch (...) {
          failures[t] = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  return {pairwise_sum(values), pairwise_sum(errors)};
}

}  // namespace fracsob::quadrature
