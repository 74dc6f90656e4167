#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "fracsob/geometry.hpp"
#include "fracsob/sobolev.hpp"

namespace fracsob::atlas {

using geometry::ManifoldPtr;
using geometry::Point;
using geometry::Region;
using geometry::SimplicialManifold;
using geometry::SurfacePoint;
using Param = Eigen::Vector2d;

class AtlasError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One simplex of the chart patch with its vertices in chart and ambient coordinates.
/// For k = 1 only the first chart coordinate is used.
struct ChartPiece {
  int simplex = -1;
  std::array<Param, 3> param;
  std::array<Point, 3> position;
};

/// A point of the patch located in chart coordinates.
struct Location {
  int piece = -1;
  std::array<double, 3> bary{};
  Point position;
};

/// Per-chart constants. `sampled_*` are pairwise distance ratios, `piece_*` the
/// exact per-simplex values; the reported constants are the larger of the two.
struct ChartMetrics {
  double lipschitz = 0.0;
  double inverse_lipschitz = 0.0;
  double jacobian = 0.0;
  double inverse_jacobian = 0.0;
  double piece_lipschitz = 0.0;
  double piece_inverse_lipschitz = 0.0;
  double sampled_lipschitz = 0.0;
  double sampled_inverse_lipschitz = 0.0;
};

/**
 * PL chart t_x: U_x -> B(x, eps) ∩ M with t_x(0) = x.
 *
 * The patch is the connected set of simplices meeting the open ball. For k = 1
 * chart coordinates are arc length from x; for k = 2 they are the orthogonal
 * projection onto the least-squares plane of the patch through x. U_x is the
 * part of the projected patch whose lift lies in the open ball.
 */
class ChartFactory;

class Chart {
 public:
  int dim() const { return k_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  int center_simplex() const { return center_simplex_; }
  const std::vector<ChartPiece>& pieces() const { return pieces_; }
  const ChartMetrics& metrics() const { return metrics_; }

  /// Piece and barycentric coordinates of a chart point in the patch, if any.
  std::optional<Location> locate(const Param& yhat) const;
  /// As locate, restricted to pieces whose mesh simplex is flagged in `mask`.
  std::optional<Location> locate_in(const Param& yhat, std::span<const char> mask) const;
  /// t_x(yhat) for yhat in the projected patch.
  std::optional<Point> forward(const Param& yhat) const;
  /// t_x^{-1}(y) for y lying on the given piece.
  Param inverse(const Point& y, int piece) const;
  /// Piece index of a mesh simplex, or -1.
  int piece_of(int simplex) const;
  /// yhat in U_x.
  bool in_domain(const Param& yhat) const;

  /// Radii along a chart direction where the ray leaves U_x for the first and the last time.
  std::pair<double, double> exit_radii(const Param& direction) const;
  /// Unit directions used for boundary sampling (2 for k = 1, 64 for k = 2).
  std::vector<Param> sample_directions() const;

  /// Affine map of a piece from chart to ambient coordinates: position = base + D (yhat - param0).
  Eigen::Matrix<double, 3, 2> piece_differential(int piece) const;

  /// Transported chart on the dilated manifold: yhat -> lambda * t_x(yhat) on the same U_x.
  Chart dilated(double lambda) const;

 private:
  friend class ChartFactory;
  void compute_metrics();

  int k_ = 1;
  Point center_;
  double radius_ = 0.0;
  int center_simplex_ = -1;
  std::vector<ChartPiece> pieces_;
  std::vector<int> piece_by_simplex_;
  ChartMetrics metrics_;
};

/// Build the chart at x (lying on simplex x.simplex). Throws AtlasError naming the failing simplex.
Chart build_chart(const ManifoldPtr& mesh, const SurfacePoint& x, double eps);

/// Surface point at a mesh vertex (on its first incident simplex).
SurfacePoint vertex_point(const SimplicialManifold& mesh, int vertex);

/// Largest eps in {diam * 2^-j, j = 0..20} for which a chart builds at every vertex.
double select_epsilon(const ManifoldPtr& mesh);

struct ChartConstants {
  double L = 0.0;
  double L_hat = 0.0;
  double J = 0.0;
  double J_hat = 0.0;
};

ChartConstants estimate_constants(const std::vector<Chart>& charts);

struct InclusionReport {
  bool inner_ok = false;
  bool outer_ok = false;
  double inner_margin = 0.0;  // min exit radius - eps / L
  double outer_margin = 0.0;  // eps * L_hat - max exit radius
};

/// Margins are accepted down to -1e-12 * eps to absorb rounding in the exit radii.
InclusionReport verify_inclusions(const Chart& chart);
InclusionReport verify_inclusions(const Chart& chart, double lipschitz, double inverse_lipschitz);

/// Charts at every vertex of the mesh.
std::vector<Chart> build_atlas(const ManifoldPtr& mesh, double eps);

struct ScalingRow {
  double lambda = 1.0;
  double measure = 0.0;  // |omega_lambda|
  ChartConstants constants;
};

struct ScalingStudy {
  std::vector<ScalingRow> rows;
  double slope_L = 0.0;
  double slope_L_hat = 0.0;
  double slope_J = 0.0;
  double slope_J_hat = 0.0;
};

/// Constants of the transported atlas on dilate(M, lambda) and their log-log slopes against |omega_lambda|.
ScalingStudy scaling_study(const std::vector<Chart>& charts, const Region& omega, const std::vector<double>& lambdas);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Boundary cover of the closure of omega: centers on the boundary forming an eps/4 net.
struct BoundaryCover {
  Region omega;
  double epsilon = 0.0;
  std::vector<SurfacePoint> centers;
};

BoundaryCover build_cover(const Region& omega, double eps);

/// Cutoffs psi_0..psi_N as PL fields on the whole mesh of omega.
struct PartitionOfUnity {
  std::vector<sobolev::ScalarField> psi;
  std::vector<double> lipschitz;  // L_psi per cutoff
};

/// Raw cutoff values at a point of the mesh (exact, not interpolated). The
/// normalizer is max(sum d_j, 1/4), which equals sum d_j on the closure of omega.
std::vector<double> cutoff_values(const BoundaryCover& cover, const SurfacePoint& x);

PartitionOfUnity partition_of_unity(const BoundaryCover& cover);

}  // namespace fracsob::atlas
