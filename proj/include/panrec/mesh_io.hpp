#pragma once

#include <string>

#include "panrec/geometry.hpp"

namespace panrec {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Writes vertices as doubles and, for labeled meshes, per-face `category`
/// and `instance` int properties.
void write_ply(const std::string& path, const TriangleMesh& mesh,
               PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);

/// Reads ascii or binary_little_endian PLY. Polygons are fan-triangulated.
/// Face `category`/`instance` (or `semantic`) properties become labels.
TriangleMesh read_ply(const std::string& path);

/// OBJ carries labels as `usemtl panrec_<category>_<instance>` groups.
void write_obj(const std::string& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::string& path);

/// Dispatches on the file extension (.ply / .obj).
TriangleMesh read_mesh(const std::string& path);
void write_mesh(const std::string& path, const TriangleMesh& mesh);

}  // namespace panrec
