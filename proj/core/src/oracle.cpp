// Brute-force midpoint oracle for the Gagliardo seminorm. Deliberately shares no
// code with the pair quadrature: no Gauss rules, no analytic self terms.
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fracsob/sobolev.hpp"

namespace fracsob::sobolev {

namespace {

struct OracleCells {
  std::vector<Point> x;
  std::vector<double> u;
  std::vector<double> w;
  // Children of each cell for the diagonal correction (2 or 4 per cell).
  std::vector<std::array<Point, 4>> child_x;
  std::vector<std::array<double, 4>> child_u;
};

struct LinearSample {
  Point x;
  double u;
};

LinearSample lerp3(const std::array<Point, 3>& x, const std::array<double, 3>& u, double b0, double b1,
                   double b2) {
  return {b0 * x[0] + b1 * x[1] + b2 * x[2], b0 * u[0] + b1 * u[1] + b2 * u[2]};
}

OracleCells build_cells(const ScalarField& u, const Region& region, int per_simplex_hint, int resolution) {
  const auto& m = region.mesh();
  OracleCells cells;
  const double total = geometry::measure(region);
  for (int i = 0; i < m.num_simplices(); ++i) {
    if (!region.contains(i)) continue;
    const auto& s = m.simplex(i);
    if (m.intrinsic_dim() == 1) {
      const Point a = m.vertex(s[0]);
      const Point b = m.vertex(s[1]);
      const double ua = u.value(s[0]);
      const double ub = u.value(s[1]);
      const int n = std::max(1, static_cast<int>(std::lround(resolution * m.volume(i) / total)));
      const double h = m.volume(i) / n;
      for (int c = 0; c < n; ++c) {
        auto at = [&](double t) { return LinearSample{a + t * (b - a), ua + t * (ub - ua)}; };
        const auto mid = at((c + 0.5) / n);
        const auto q1 = at((c + 0.25) / n);
        const auto q3 = at((c + 0.75) / n);
        cells.x.push_back(mid.x);
        cells.u.push_back(mid.u);
        cells.w.push_back(h);
        cells.child_x.push_back({q1.x, q3.x, q3.x, q3.x});
        cells.child_u.push_back({q1.u, q3.u, q3.u, q3.u});
      }
    } else {
      const std::array<Point, 3> x{m.vertex(s[0]), m.vertex(s[1]), m.vertex(s[2])};
      const std::array<double, 3> uv{u.value(s[0]), u.value(s[1]), u.value(s[2])};
      const int n = per_simplex_hint;
      const double w = m.volume(i) / (n * n);
      // Sub-triangles of the uniform n-subdivision, upward and downward.
      auto emit = [&](std::array<std::array<double, 3>, 3> corners) {
        auto bary_mid = [&](int a, int b) {
          return std::array<double, 3>{0.5 * (corners[a][0] + corners[b][0]), 0.5 * (corners[a][1] + corners[b][1]),
                                       0.5 * (corners[a][2] + corners[b][2])};
        };
        auto centroid_of = [](const std::array<std::array<double, 3>, 3>& c) {
          return std::array<double, 3>{(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0,
                                       (c[0][2] + c[1][2] + c[2][2]) / 3.0};
        };
        const auto c0 = centroid_of(corners);
        const auto s01 = bary_mid(0, 1);
        const auto s12 = bary_mid(1, 2);
        const auto s20 = bary_mid(2, 0);
        const std::array<std::array<std::array<double, 3>, 3>, 4> kids{{{corners[0], s01, s20},
                                                                         {s01, corners[1], s12},
                                                                         {s20, s12, corners[2]},
                                                                         {s01, s12, s20}}};
        const auto mid = lerp3(x, uv, c0[0], c0[1], c0[2]);
        cells.x.push_back(mid.x);
        cells.u.push_back(mid.u);
        cells.w.push_back(w);
        std::array<Point, 4> cx;
        std::array<double, 4> cu{};
        for (int k = 0; k < 4; ++k) {
          const auto cc = centroid_of(kids[k]);
          const auto smp = lerp3(x, uv, cc[0], cc[1], cc[2]);
          cx[k] = smp.x;
          cu[k] = smp.u;
        }
        cells.child_x.push_back(cx);
        cells.child_u.push_back(cu);
      };
      for (int a = 0; a < n; ++a) {
        for (int b = 0; a + b < n; ++b) {
          auto bc = [&](int i, int j) {
            return std::array<double, 3>{1.0 - static_cast<double>(i + j) / n, static_cast<double>(i) / n,
                                         static_cast<double>(j) / n};
          };
          emit({bc(a, b), bc(a + 1, b), bc(a, b + 1)});
          if (a + b + 1 < n) emit({bc(a + 1, b), bc(a + 1, b + 1), bc(a, b + 1)});
        }
      }
    }
  }
  return cells;
}

// |x - y|^-(k + sp) from the squared distance; exponents that are multiples of
// 1/4 are taken with square roots.
struct InverseDistancePower {
  double half_exp;
  int quarter_steps = -1;

  explicit InverseDistancePower(double kernel_exponent) : half_exp(-0.5 * kernel_exponent) {
    const double q = 2.0 * kernel_exponent;
    if (q == std::round(q) && q <= 64.0) quarter_steps = static_cast<int>(q);
  }

  double operator()(double r2) const {
    if (quarter_steps < 0) return std::pow(r2, half_exp);
    const double r4 = std::sqrt(std::sqrt(r2));
    double v = 1.0;
    for (int i = 0; i < quarter_steps; ++i) v *= r4;
    return 1.0 / v;
  }
};

double midpoint_sum(const OracleCells& cells, const SobolevParams& params) {
  const InverseDistancePower inv(params.kernel_exponent());
  const double p = params.p;
  auto powp = [p](double d) { return p == 2.0 ? d * d : std::pow(d, p); };
  const std::size_t n = cells.x.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point xi = cells.x[i];
    const double ui = cells.u[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r2 = (xi - cells.x[j]).squaredNorm();
      row += cells.w[j] * powp(std::abs(ui - cells.u[j])) * inv(r2);
    }
    // Diagonal cell: split once more, drop the self sub-pairs.
    const int nc = params.k == 1 ? 2 : 4;
    const double wc = cells.w[i] / nc;
    double diag = 0.0;
    for (int a = 0; a < nc; ++a) {
      for (int b = 0; b < nc; ++b) {
        if (a == b) continue;
        const double r2 = (cells.child_x[i][a] - cells.child_x[i][b]).squaredNorm();
        diag += wc * wc * powp(std::abs(cells.child_u[i][a] - cells.child_u[i][b])) * inv(r2);
      }
    }
    total += 2.0 * cells.w[i] * row + diag;
  }
  return total;
}

int per_triangle_subdivision(const Region& region, int resolution) {
  const int n = region.num_simplices();
  return std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(resolution) / n))));
}

}  // namespace

double oracle_seminorm(const ScalarField& u, const Region& region, const SobolevParams& params, int resolution) {
  params.validate();
  if (resolution < 64) throw SobolevError(fmt::format("oracle resolution {} below minimum 64", resolution));
  if (u.mesh_ptr() != region.mesh_ptr()) throw SobolevError("oracle_seminorm: domain mismatch");
  const int m = region.mesh().intrinsic_dim() == 2 ? per_triangle_subdivision(region, resolution) : 0;
  const auto cells = build_cells(u, region, m, resolution);
  return std::pow(std::max(0.0, midpoint_sum(cells, params)), 1.0 / params.p);
}

double oracle_seminorm_extrapolated(const ScalarField& u, const Region& region, const SobolevParams& params,
                                    int resolution) {
  params.validate();
  if (resolution < 128) throw SobolevError(fmt::format("extrapolated oracle needs resolution >= 128 (got {})", resolution));
  if (u.mesh_ptr() != region.mesh_ptr()) throw SobolevError("oracle_seminorm: domain mismatch");
  const double rate = std::min(1.0, (1.0 - params.s) * params.p);
  const double gain = std::pow(2.0, rate);
  double fine = 0.0;
  double coarse = 0.0;
  if (region.mesh().intrinsic_dim() == 1) {
    fine = midpoint_sum(build_cells(u, region, 0, resolution), params);
    coarse = midpoint_sum(build_cells(u, region, 0, resolution / 2), params);
  } else {
    int m = per_triangle_subdivision(region, resolution);
    m += m % 2;
    fine = midpoint_sum(build_cells(u, region, m, resolution), params);
    coarse = midpoint_sum(build_cells(u, region, m / 2, resolution), params);
  }
  const double extrapolated = (gain * fine - coarse) / (gain - 1.0);
  return std::pow(std::max(0.0, extrapolated), 1.0 / params.p);
}

}  // namespace fracsob::sobolev
