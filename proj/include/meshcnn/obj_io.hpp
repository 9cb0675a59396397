#pragma once

#include <filesystem>
#include <string_view>

#include "meshcnn/mesh.hpp"

namespace meshcnn {

// Wavefront OBJ subset used by colored scan exports:
//   v x y z        plain vertex
//   v x y z r g b  vertex with color (all vertex lines must agree on the form)
//   f i j k ...    1-based indices; "i/t/n" references keep only the vertex part;
//                  polygons are fan triangulated
// Everything else (vn, vt, comments, groups, materials) is ignored.
Mesh parse_obj(std::string_view text);

Mesh load_obj(const std::filesystem::path& path);

// Writes vertices (with colors when the mesh has them) and 1-based faces.
// Coordinates use round-trip precision.
void write_obj(const Mesh& mesh, const std::filesystem::path& path);

} // namespace meshcnn
