#pragma once

#include <string_view>

#include "fracsob/geometry.hpp"

namespace fracsob::geometry {

/// Regular n-gon inscribed in the unit circle.
SimplicialManifold circle_polygon(int n);
/// Boundary of the unit square centered at the origin, n segments per side.
SimplicialManifold square_boundary(int n);
/// Unit icosphere after `level` midpoint subdivisions of the icosahedron.
SimplicialManifold icosphere(int level);
/// Surface of the unit cube centered at the origin, 2^level x 2^level quads per face.
SimplicialManifold cube_surface(int level);

/// Unit circle polygon graded toward angle 0: spacing max(h0, angle / 32) with
/// h0 = 2 pi 2^-level / 64, so arcs [0, 2 pi 2^-j], j <= level, are resolved.
SimplicialManifold graded_circle(int level);
/// Dispatch by name: circle-polygon, square-boundary, icosphere, cube-surface, graded-circle.
SimplicialManifold builtin_mesh(std::string_view name, int resolution);

}  // namespace fracsob::geometry
