#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracsob/geometry.hpp"
#include "fracsob/quadrature.hpp"

namespace fracsob::sobolev {

using geometry::ManifoldPtr;
using geometry::Point;
using geometry::Region;
using geometry::SimplicialManifold;
using quadrature::QuadratureSpec;

class SobolevError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fractional order s in (0, 1), integrability p >= 1, intrinsic dimension k.
struct SobolevParams {
  double s = 0.5;
  double p = 2.0;
  int k = 1;

  static SobolevParams make(double s, double p, int k);
  void validate() const;
  double kernel_exponent() const { return k + s * p; }
};

/**
 * Piecewise-linear field: one value per mesh vertex, defined on the simplices
 * flagged in its domain mask. Values at vertices outside the domain closure are
 * kept at zero.
 */
class ScalarField {
 public:
  ScalarField(ManifoldPtr mesh, std::vector<double> values, std::vector<char> domain);

  static ScalarField on_region(const Region& region, std::vector<double> values);
  static ScalarField on_manifold(ManifoldPtr mesh, std::vector<double> values);
  static ScalarField constant(const Region& region, double c);
  static ScalarField sample(const Region& region, const std::function<double(const Point&)>& f);

  const SimplicialManifold& mesh() const { return *mesh_; }
  const ManifoldPtr& mesh_ptr() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double value(int vertex) const { return values_[static_cast<std::size_t>(vertex)]; }
  std::span<const char> domain() const { return domain_; }
  bool defined_on(int simplex) const { return domain_[static_cast<std::size_t>(simplex)] != 0; }
  /// Domain as a region of the same mesh.
  Region domain_region() const;

  /// Barycentric interpolation inside simplex i.
  double evaluate(int simplex, const std::array<double, 3>& bary) const;

  /// Linear combination a*this + b*other; domains must match.
  ScalarField combine(double a, const ScalarField& other, double b) const;
  ScalarField scaled(double a) const;

 private:
  ManifoldPtr mesh_;
  std::vector<double> values_;
  std::vector<char> domain_;
};

struct SeminormResult {
  double value = 0.0;           // |u|_{W^{s,p}}
  double power = 0.0;           // |u|^p
  double error_estimate = 0.0;  // |difference of |u|^p between the last two grading depths|
};

struct NormRecord {
  double lp = 0.0;
  double seminorm = 0.0;
  double wsp = 0.0;
  double error_estimate = 0.0;
};

/// (int_region |u|^p ds)^(1/p).
double lp_norm(const ScalarField& u, const Region& region, double p);
/// int_region |u|^p ds.
double lp_norm_power(const ScalarField& u, const Region& region, double p);

/// Gagliardo seminorm over region x region.
SeminormResult gagliardo_seminorm(const ScalarField& u, const Region& region,
                                  const SobolevParams& params, const QuadratureSpec& q = {});

/// int_A int_B |u(x) - u(y)|^p / |x - y|^(k + sp) over the closures of two simplex sets.
quadrature::RowSum pair_integral(const ScalarField& u, const Region& a, const Region& b,
                                 const SobolevParams& params, const QuadratureSpec& q = {});

/// (lp^p + seminorm^p)^(1/p).
NormRecord wsp_norm(const ScalarField& u, const Region& region, const SobolevParams& params,
                    const QuadratureSpec& q = {});

/// Seminorm of a PL field given directly as cells (for instance in chart coordinates).
SeminormResult cell_seminorm(std::span<const quadrature::Cell> cells, const SobolevParams& params,
                             const QuadratureSpec& q = {});
/// int |u|^p over a list of cells.
double cell_lp_power(std::span<const quadrature::Cell> cells, double p);

/// Exact double integral of |g.(x - y)|^p / |x - y|^(k + sp) over a simplex paired with itself.
double self_interaction(const quadrature::Cell& cell, const SobolevParams& params);

/**
 * Brute-force midpoint double sum over a uniform parameter grid; diagonal cells
 * are split once more and their self pairs dropped. Converges like
 * O(h^min(1, (1 - s) p)). `resolution` is the number of cells along the region
 * (k = 1) or the target total number of cells (k = 2); must be >= 64.
 */
double oracle_seminorm(const ScalarField& u, const Region& region, const SobolevParams& params,
                       int resolution);

/// Two-level Richardson extrapolation of the oracle using its leading rate (1 - s) p.
double oracle_seminorm_extrapolated(const ScalarField& u, const Region& region,
                                    const SobolevParams& params, int resolution);

/// Same values on a subregion; throws if `sub` is not inside the domain of u.
ScalarField restrict(const ScalarField& u, const Region& sub);

/// PL interpolation onto a uniformly refined mesh (exact for PL fields).
ScalarField refine(const ScalarField& u, const geometry::Refinement& refinement);

/// Vertex-value CSV with lines `vertex_index,value`.
void save_field_csv(const ScalarField& u, const std::filesystem::path& path);
ScalarField load_field_csv(const Region& domain, const std::filesystem::path& path);

}  // namespace fracsob::sobolev
