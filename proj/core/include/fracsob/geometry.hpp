#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fracsob::geometry {

/// Points are stored in 3-space; planar (n = 2) meshes keep z = 0.
using Point = Eigen::Vector3d;

/// Vertex indices of a k-simplex. For k = 1 the third slot is -1.
using Simplex = std::array<int, 3>;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lying on a simplex of a manifold.
struct SurfacePoint {
  Point position;
  int simplex = -1;
};

/**
 * Closed, connected, embedded simplicial k-manifold in n-space
 * (polyline loops for k = 1, n = 2 and closed triangle meshes for k = 2, n = 3).
 *
 * Instances are immutable. `create` runs every invariant check; `create_trusted`
 * skips the quadratic embedding test and is meant for meshes derived from an
 * already validated one (refinement, cutting, dilation).
 */
class SimplicialManifold {
 public:
  static SimplicialManifold create(int ambient_dim, int intrinsic_dim, std::vector<Point> vertices,
                                   std::vector<Simplex> simplices);
  static SimplicialManifold create_trusted(int ambient_dim, int intrinsic_dim,
                                           std::vector<Point> vertices,
                                           std::vector<Simplex> simplices);

  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return intrinsic_dim_; }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Simplex> simplices() const { return simplices_; }
  const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const Simplex& simplex(int i) const { return simplices_[static_cast<std::size_t>(i)]; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_simplices() const { return static_cast<int>(simplices_.size()); }
  int vertices_per_simplex() const { return intrinsic_dim_ + 1; }

  /// k-volume of simplex i (length or area).
  double volume(int i) const { return volumes_[static_cast<std::size_t>(i)]; }
  double total_measure() const { return total_measure_; }

  /// Neighbors across each (k-1)-face; neighbor j is opposite local vertex j.
  const std::array<int, 3>& neighbors(int i) const {
    return neighbors_[static_cast<std::size_t>(i)];
  }

  Point centroid(int i) const;
  /// Largest vertex-to-vertex distance inside simplex i.
  double simplex_diameter(int i) const;

  /// Largest pairwise vertex distance, which is the diameter of a PL set.
  double diameter() const { return diameter_; }
  double bounding_box_diameter() const { return bbox_diameter_; }

  /// V - E + F (k = 2) or V - E (k = 1).
  int euler_characteristic() const;

  /// Point at barycentric coordinates (bary[0..k]) of simplex i.
  Point interpolate(int i, const std::array<double, 3>& bary) const;

 private:
  SimplicialManifold() = default;
  void build_topology();
  void check_degeneracy() const;
  void check_embedding() const;

  int ambient_dim_ = 0;
  int intrinsic_dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<Simplex> simplices_;
  std::vector<double> volumes_;
  std::vector<std::array<int, 3>> neighbors_;
  double total_measure_ = 0.0;
  double diameter_ = 0.0;
  double bbox_diameter_ = 0.0;
};

using ManifoldPtr = std::shared_ptr<const SimplicialManifold>;

/// Subset of M given as a set of whole simplices of a mesh that conforms to it.
/// Partially covered input simplices are split by `make_region` so that every
/// simplex of `mesh()` is either fully inside or fully outside.
class Region {
 public:
  Region(ManifoldPtr mesh, std::vector<char> inside);

  /// The whole manifold; its boundary is empty.
  static Region whole(ManifoldPtr mesh);

  const SimplicialManifold& mesh() const { return *mesh_; }
  const ManifoldPtr& mesh_ptr() const { return mesh_; }

  bool contains(int simplex) const { return inside_[static_cast<std::size_t>(simplex)] != 0; }
  /// True if the vertex belongs to the closure of the region.
  bool contains_vertex(int vertex) const {
    return vertex_in_closure_[static_cast<std::size_t>(vertex)] != 0;
  }
  std::span<const char> mask() const { return inside_; }
  std::vector<int> simplex_ids() const;
  int num_simplices() const;
  bool is_whole() const;

  /// k = 1: the boundary vertices; k = 2: vertex ids of every boundary edge.
  std::span<const int> boundary_points() const { return boundary_points_; }
  std::span<const std::array<int, 2>> boundary_segments() const { return boundary_segments_; }
  /// Number of closed boundary loops (k = 2) or boundary points (k = 1).
  int boundary_components() const;

  /// M minus the region, sharing its boundary.
  Region complement() const;

 private:
  void extract_boundary();

  ManifoldPtr mesh_;
  std::vector<char> inside_;
  std::vector<char> vertex_in_closure_;
  std::vector<int> boundary_points_;
  std::vector<std::array<int, 2>> boundary_segments_;
};

struct ArcSelector {
  double begin_angle = 0.0;  // radians, measured about the origin in the xy-plane
  double end_angle = 0.0;
};

/// Geodesic cap on a sphere centered at the origin: {x : angle(x, center) < radius}.
struct CapSelector {
  Point center = Point::UnitZ();
  double radius = 0.0;
};

/// {x : normal . x > offset}
struct HalfspaceSelector {
  Point normal = Point::UnitZ();
  double offset = 0.0;
};

struct SimplexListSelector {
  std::vector<int> simplices;
};

using RegionSelector = std::variant<ArcSelector, CapSelector, HalfspaceSelector, SimplexListSelector>;

/// Build a region, splitting simplices along the selector's cut so the result conforms.
Region make_region(const ManifoldPtr& mesh, const RegionSelector& selector);

double measure(const Region& region);

double euclidean_distance(const Point& x, const Point& y);
double point_simplex_distance(const SimplicialManifold& mesh, int simplex, const Point& x);
double simplex_simplex_distance(const SimplicialManifold& mesh, int a, int b);

/// Distance from x to the closure of the region's simplices.
double dist_to_set(const Point& x, const Region& target);
/// Distance from x to the region boundary.
double dist_to_boundary(const Point& x, const Region& target);
/// Minimum distance between the closures of two simplex sets of the same mesh.
double dist_between(const Region& a, const Region& b);

SimplicialManifold dilate(const SimplicialManifold& mesh, double lambda);
Region dilate(const Region& region, double lambda);

struct Refinement {
  ManifoldPtr mesh;
  std::vector<int> parent_simplex;
  /// For each fine vertex, the two coarse vertices whose midpoint it is (equal for old vertices).
  std::vector<std::array<int, 2>> vertex_parents;
};

/// One uniform dyadic refinement (segments halved, triangles split in four).
Refinement refine(const SimplicialManifold& mesh);
Region refine(const Region& region, const Refinement& refinement);

}  // namespace fracsob::geometry
