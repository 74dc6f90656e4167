#pragma once

#include <filesystem>
#include <string_view>

#include "fracsob/geometry.hpp"

namespace fracsob::geometry {

enum class MeshFormat { obj, polyline_csv };

/// Parse a mesh file. OBJ accepts `v x y z` and triangular `f i j k` lines; a
/// polyline CSV holds one `x,y` vertex per line and is closed implicitly.
/// Errors carry the offending line or element index.
SimplicialManifold load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format inferred from the extension (`.obj`, otherwise polyline CSV).
SimplicialManifold load_mesh(const std::filesystem::path& path);

SimplicialManifold parse_obj(std::string_view text);
SimplicialManifold parse_polyline_csv(std::string_view text);

void save_obj(const SimplicialManifold& mesh, const std::filesystem::path& path);
void save_polyline_csv(const SimplicialManifold& mesh, const std::filesystem::path& path);

}  // namespace fracsob::geometry
